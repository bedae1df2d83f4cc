import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the live integration test boots a real backend process
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
