import { defineConfig } from "vitest/config";
import type { Reporter, TestModule } from "vitest/node";

// The exchange parity suite is this package's binding check; its verdict
// prints as one summary line, the same shape the service's own test
// suite uses for its numbered criteria.
const verdictLine: Reporter = {
  onTestRunEnd(testModules: ReadonlyArray<TestModule>) {
    const parity = testModules.find((m) => m.moduleId.endsWith("parity.test.ts"));
    const state = parity?.state();
    const verdict =
      state === undefined ? "not run" : state === "passed" ? "pass" : state === "skipped" ? "skip" : "FAIL";
    process.stdout.write(`criterion 8: ui workflow parity ... ${verdict}\n`);
  },
};

export default defineConfig({
  test: {
    reporters: ["default", verdictLine],
  },
});
