import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["test/e2e.test.ts"],
    globalSetup: ["test/e2e.setup.ts"],
    testTimeout: 30000,
    hookTimeout: 60000,
  },
});
