import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    globalSetup: ["./test/service.ts"],
    include: ["test/**/*.test.ts"],
    testTimeout: 180_000,
    hookTimeout: 120_000,
    // The suite drives one shared live service; keep files sequential so
    // session counts in the event log stay predictable.
    fileParallelism: false,
  },
});
