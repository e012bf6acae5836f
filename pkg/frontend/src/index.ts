export * from "./events.js";
export * from "./sha1.js";
export * from "./psl.js";
export * from "./urls.js";
export * from "./transport.js";
export * from "./client.js";
export * from "./adapter.js";
