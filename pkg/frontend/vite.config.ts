import { defineConfig } from "vitest/config";

export default defineConfig({
  base: "./",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  server: {
    // dev-mode convenience; the built UI is served by the review server itself
    proxy: { "/api": "http://127.0.0.1:8400" },
  },
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 15000,
  },
});
