import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // cross-component tests spawn the Python bridge and CLI
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
