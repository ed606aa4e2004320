import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // the live-session test boots a real server and streams for a while
    testTimeout: 60_000,
    hookTimeout: 30_000,
  },
});
