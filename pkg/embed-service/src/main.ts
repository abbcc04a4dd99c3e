import { createService } from "./server.js";

function parseArgs(argv: string[]): Record<string, string> {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) continue;
    const key = arg.slice(2);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      args[key] = "true";
    } else {
      args[key] = value;
      i++;
    }
  }
  return args;
}

function listenAddress(args: Record<string, string>): { host: string; port: number } {
  let host = args["host"] ?? "127.0.0.1";
  let port = args["port"] !== undefined ? Number(args["port"]) : NaN;
  const env = process.env["SBF_EMBED_ADDR"];
  if (env && args["host"] === undefined && args["port"] === undefined) {
    const sep = env.lastIndexOf(":");
    if (sep > 0) {
      host = env.slice(0, sep);
      port = Number(env.slice(sep + 1));
    } else {
      port = Number(env);
    }
  }
  if (Number.isNaN(port)) port = 8742;
  return { host, port };
}

const args = parseArgs(process.argv.slice(2));
if (args["help"]) {
  console.log(
    "usage: node dist/main.js [--host H] [--port P] [--models id,id] " +
      "[--model-dir DIR] [--max-batch N] [--max-text-length N]\n" +
      "listen address also via SBF_EMBED_ADDR=host:port",
  );
  process.exit(0);
}

const { host, port } = listenAddress(args);
const service = createService({
  modelIds: (args["models"] ?? "all-MiniLM-L6-v2").split(",").filter(Boolean),
  modelDir: args["model-dir"],
  maxBatch: Number(args["max-batch"] ?? 256),
  maxTextLength: Number(args["max-text-length"] ?? 2048),
});

const server = service.app.listen(port, host, () => {
  const addr = server.address();
  const boundPort = typeof addr === "object" && addr ? addr.port : port;
  console.log(`embed-service listening on http://${host}:${boundPort}`);
});

service.ready
  .then(() => console.log("embed-service ready"))
  .catch((err: Error) => {
    console.error(`model load failed: ${err.message}`);
    process.exit(1);
  });

for (const signal of ["SIGINT", "SIGTERM"] as const) {
  process.on(signal, () => {
    server.close();
    process.exit(0);
  });
}
