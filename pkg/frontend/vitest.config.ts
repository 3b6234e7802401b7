import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the live-service test simulates and reconstructs through HTTP
    testTimeout: 120_000,
    hookTimeout: 60_000,
  },
});
