export * from "./schema.js";
export * from "./svg.js";
export * from "./render.js";
