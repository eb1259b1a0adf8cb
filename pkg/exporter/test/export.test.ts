import * as tf from "@tensorflow/tfjs";
import { existsSync, mkdtempSync, readFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { ExportError } from "../src/chain.js";
import { exportCheckpoint } from "../src/export.js";
import { loadRcw } from "../src/rcw.js";
import { loadModelDir, saveModelDir } from "../src/tfio.js";

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "export-"));
}

async function identityCheckpoint(dir: string): Promise<void> {
  const model = tf.sequential();
  model.add(tf.layers.dense({ units: 2, activation: "relu", inputShape: [2], name: "fc" }));
  model.layers[0].setWeights([tf.tensor2d([[1, 0], [0, 1]]), tf.tensor1d([0, 0])]);
  await saveModelDir(model, dir);
}

describe("tfio", () => {
  it("round-trips a model through model.json + weights.bin", async () => {
    const dir = tmp();
    await identityCheckpoint(join(dir, "ckpt"));
    const model = await loadModelDir(join(dir, "ckpt"));
    const [kernel, bias] = model.layers[0].getWeights();
    expect(kernel.arraySync()).toEqual([[1, 0], [0, 1]]);
    expect(bias.arraySync()).toEqual([0, 0]);
  });

  it("reports a missing checkpoint", async () => {
    await expect(loadModelDir("/nonexistent/ckpt")).rejects.toThrow(/model\.json/);
  });
});

describe("exportCheckpoint", () => {
  it("turns an identity dense layer into the known two-neuron file", async () => {
    const dir = tmp();
    await identityCheckpoint(join(dir, "ckpt"));
    const out = join(dir, "net.json");
    const result = await exportCheckpoint({
      ckptPath: join(dir, "ckpt"),
      layerNames: ["fc"],
      outPath: out,
    });
    expect(JSON.parse(readFileSync(out, "utf8"))).toEqual({
      format: "rcw-json/1",
      input_dim: 2,
      layers: [{ weights: [[1, 0], [0, 1]], bias: [0, 0] }],
    });
    // the framework casts inputs to f32, so even an identity layer deviates
    // from the f64 reference by input rounding, never more
    expect(result.report.maxAbsDeviation).toBeLessThan(1e-6);
    expect(result.report.ok).toBe(true);
  });

  it("writes parity.json beside the output", async () => {
    const dir = tmp();
    await identityCheckpoint(join(dir, "ckpt"));
    const result = await exportCheckpoint({
      ckptPath: join(dir, "ckpt"),
      layerNames: ["fc"],
      outPath: join(dir, "net.rcw"),
      samples: 25,
      seed: 3,
    });
    expect(result.parityPath).toBe(join(dir, "parity.json"));
    const report = JSON.parse(readFileSync(result.parityPath, "utf8"));
    expect(report.samples).toBe(25);
    expect(report.seed).toBe(3);
    expect(report.tolerance).toBe(1e-5);
    expect(report.totalNeurons).toBe(2);
    expect(report.layers).toEqual(["fc"]);
  });

  it("refuses to write when parity misses the tolerance", async () => {
    const dir = tmp();
    const model = tf.sequential();
    model.add(tf.layers.dense({ units: 4, activation: "relu", inputShape: [3], name: "fc" }));
    await saveModelDir(model, join(dir, "ckpt"));
    const out = join(dir, "net.rcw");
    // impossible tolerance: f32 framework math vs f64 reference always
    // deviates a little on random weights
    await expect(
      exportCheckpoint({
        ckptPath: join(dir, "ckpt"),
        layerNames: ["fc"],
        outPath: out,
        tolerance: 0,
      }),
    ).rejects.toThrow(/refusing to write/);
    expect(existsSync(out)).toBe(false);
    expect(existsSync(join(dir, "parity.json"))).toBe(false);
  });

  it("propagates missing-layer errors", async () => {
    const dir = tmp();
    await identityCheckpoint(join(dir, "ckpt"));
    await expect(
      exportCheckpoint({
        ckptPath: join(dir, "ckpt"),
        layerNames: ["nope"],
        outPath: join(dir, "net.rcw"),
      }),
    ).rejects.toThrow(ExportError);
  });

  it("is deterministic for a fixed seed", async () => {
    const dir = tmp();
    await identityCheckpoint(join(dir, "ckpt"));
    const run = () =>
      exportCheckpoint({
        ckptPath: join(dir, "ckpt"),
        layerNames: ["fc"],
        outPath: join(dir, "net.rcw"),
        samples: 10,
        seed: 5,
      });
    const a = await run();
    const b = await run();
    expect(a.report).toEqual(b.report);
    expect(loadRcw(a.rcwPath)).toEqual(loadRcw(b.rcwPath));
  });
});
