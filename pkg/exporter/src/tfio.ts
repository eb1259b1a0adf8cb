/**
 * File-system persistence for TensorFlow.js Layers models.
 *
 * The browser bundle has no file:// handlers, so saving and loading go
 * through custom IO handlers: model.json (topology + weights manifest)
 * next to weights.bin, the layout the tfjs converter tooling uses.
 */

import * as tf from "@tensorflow/tfjs";
import { mkdirSync, readFileSync, writeFileSync } from "fs";
import { join } from "path";

function toArrayBuffer(data: ArrayBuffer | ArrayBuffer[]): ArrayBuffer {
  if (!Array.isArray(data)) {
    return data;
  }
  const total = data.reduce((n, b) => n + b.byteLength, 0);
  const out = new Uint8Array(total);
  let pos = 0;
  for (const b of data) {
    out.set(new Uint8Array(b), pos);
    pos += b.byteLength;
  }
  return out.buffer;
}

export async function saveModelDir(model: tf.LayersModel, dir: string): Promise<void> {
  mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const modelJson = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format,
        generatedBy: artifacts.generatedBy,
        weightsManifest: [
          { paths: ["weights.bin"], weights: artifacts.weightSpecs },
        ],
      };
      writeFileSync(join(dir, "model.json"), JSON.stringify(modelJson), "utf8");
      writeFileSync(
        join(dir, "weights.bin"),
        Buffer.from(toArrayBuffer(artifacts.weightData as ArrayBuffer | ArrayBuffer[])),
      );
      return {
        modelArtifactsInfo: { dateSaved: new Date(), modelTopologyType: "JSON" },
      };
    }),
  );
}

export async function loadModelDir(dir: string): Promise<tf.LayersModel> {
  let raw: string;
  try {
    raw = readFileSync(join(dir, "model.json"), "utf8");
  } catch {
    throw new Error(`no model.json under ${dir}`);
  }
  const modelJson = JSON.parse(raw);
  const manifest = modelJson.weightsManifest ?? [];
  const weightSpecs = manifest.flatMap((g: any) => g.weights);
  const parts: Buffer[] = manifest.flatMap((g: any) =>
    g.paths.map((p: string) => readFileSync(join(dir, p))),
  );
  const weightData = Buffer.concat(parts);
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: modelJson.modelTopology,
      weightSpecs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength,
      ),
    }),
  );
}
