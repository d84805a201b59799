import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the end-to-end flow waits out two scripted 3 s runs plus polling
    testTimeout: 60_000,
    hookTimeout: 60_000,
    // every e2e test talks to the same spawned gateway; keep them serial
    fileParallelism: false,
  },
});
