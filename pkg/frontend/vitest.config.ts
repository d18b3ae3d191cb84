import { defineConfig } from "vitest/config";

export default defineConfig({
  // Source files import siblings with a .js suffix (native-ESM output for the
  // browser); map those back to the .ts sources for the test runner.
  resolve: {
    alias: [{ find: /^(\.{1,2}\/.*)\.js$/, replacement: "$1" }],
  },
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
  },
});
