import * as tf from "@tensorflow/tfjs";
import { mkdtempSync, readFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { exportCheckpoint } from "../src/export.js";
import { loadRcw, saveRcw, toBinBytes, totalNeurons, widths } from "../src/rcw.js";
import { saveModelDir } from "../src/tfio.js";

// acceptance criterion A9: a 256/128/128 fully connected ReLU stack
// exports with max forward deviation < 1e-5 over 100 random inputs, and
// re-exporting the emitted file is value-identical

describe("A9 exporter parity", () => {
  it("exports the 256/128/128 stack with parity under 1e-5", async () => {
    const dir = mkdtempSync(join(tmpdir(), "a9-"));
    const model = tf.sequential();
    model.add(tf.layers.dense({
      units: 256, activation: "relu", inputShape: [128], name: "fc0",
      kernelInitializer: tf.initializers.glorotUniform({ seed: 1 }),
    }));
    model.add(tf.layers.dense({
      units: 128, activation: "relu", name: "fc1",
      kernelInitializer: tf.initializers.glorotUniform({ seed: 2 }),
    }));
    model.add(tf.layers.dense({
      units: 128, activation: "relu", name: "fc2",
      kernelInitializer: tf.initializers.glorotUniform({ seed: 3 }),
    }));
    model.add(tf.layers.dense({ units: 10, activation: "softmax", name: "head" }));
    await saveModelDir(model, join(dir, "ckpt"));

    const result = await exportCheckpoint({
      ckptPath: join(dir, "ckpt"),
      layerNames: ["fc0", "fc1", "fc2"],
      outPath: join(dir, "stack.rcw"),
      samples: 100,
      seed: 9,
    });

    expect(widths(result.net)).toEqual([256, 128, 128]);
    expect(totalNeurons(result.net)).toBe(512);
    expect(result.report.samples).toBe(100);
    expect(result.report.maxAbsDeviation).toBeLessThan(1e-5);
    const parity = JSON.parse(readFileSync(result.parityPath, "utf8"));
    expect(parity.maxAbsDeviation).toBe(result.report.maxAbsDeviation);

    console.log(
      `A9 parity: N=${totalNeurons(result.net)}, max deviation ` +
        `${result.report.maxAbsDeviation.toExponential(3)} over 100 inputs -- PASS`,
    );

    // re-export round trip: value-identical, and byte-identical in binary
    const loaded = loadRcw(result.rcwPath);
    expect(loaded).toEqual(result.net);
    saveRcw(loaded, join(dir, "again.rcw"));
    expect(
      readFileSync(join(dir, "again.rcw")).equals(readFileSync(result.rcwPath)),
    ).toBe(true);
    saveRcw(loaded, join(dir, "stack.json"));
    expect(loadRcw(join(dir, "stack.json"))).toEqual(result.net);
    expect(toBinBytes(loadRcw(join(dir, "stack.json"))).equals(toBinBytes(result.net))).toBe(
      true,
    );
  });
});
