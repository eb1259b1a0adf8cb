/**
 * Pulls a named chain of fully connected ReLU layers out of a Layers model.
 *
 * Every named layer must be Dense with ReLU activation; a classifier head
 * is simply left out of the name list. Kernels arrive as (fanIn, units)
 * and are transposed to the one-row-per-neuron layout the weight files use.
 */

import * as tf from "@tensorflow/tfjs";
import type { RcwNetwork, RcwLayer } from "./rcw.js";

export class ExportError extends Error {}

function transpose(kernel: number[][]): number[][] {
  const fanIn = kernel.length;
  const units = kernel[0].length;
  const out: number[][] = [];
  for (let u = 0; u < units; u++) {
    const row: number[] = new Array(fanIn);
    for (let i = 0; i < fanIn; i++) {
      row[i] = kernel[i][u];
    }
    out.push(row);
  }
  return out;
}

export function extractChain(model: tf.LayersModel, layerNames: string[]): RcwNetwork {
  if (layerNames.length === 0) {
    throw new ExportError("no layers named");
  }
  const byName = new Map(model.layers.map((l) => [l.name, l]));
  const layers: RcwLayer[] = [];
  let fanIn: number | null = null;

  for (const name of layerNames) {
    const layer = byName.get(name);
    if (!layer) {
      const available = model.layers.map((l) => l.name).join(", ");
      throw new ExportError(`layer "${name}" not found; available layers: ${available}`);
    }
    const cls = layer.getClassName();
    if (cls !== "Dense") {
      throw new ExportError(`layer "${name}" is not an affine layer (${cls})`);
    }
    const activation = (layer.getConfig() as any).activation;
    if (activation !== "relu") {
      throw new ExportError(
        `layer "${name}" is not followed by ReLU (activation "${activation}")`,
      );
    }
    const tensors = layer.getWeights();
    const kernel = tensors[0].arraySync() as number[][];
    const units = kernel[0].length;
    const bias =
      tensors.length > 1
        ? (tensors[1].arraySync() as number[])
        : new Array(units).fill(0);
    if (fanIn !== null && kernel.length !== fanIn) {
      throw new ExportError(
        `layer "${name}" expects ${kernel.length} inputs but the previous layer emits ${fanIn}`,
      );
    }
    if (fanIn === null) {
      fanIn = kernel.length;
    }
    layers.push({ weights: transpose(kernel), bias });
    fanIn = units;
  }

  return { inputDim: layers[0].weights[0].length, layers };
}

/** Framework-side forward: per-layer post-activation outputs in f32. */
export function frameworkForward(
  model: tf.LayersModel,
  layerNames: string[],
  inputs: number[][],
): number[][][] {
  const byName = new Map(model.layers.map((l) => [l.name, l]));
  return tf.tidy(() => {
    let h: tf.Tensor = tf.tensor2d(inputs);
    const perLayer: number[][][] = [];
    for (const name of layerNames) {
      const layer = byName.get(name);
      if (!layer) {
        throw new ExportError(`layer "${name}" not found`);
      }
      h = layer.apply(h) as tf.Tensor;
      perLayer.push(h.arraySync() as number[][]);
    }
    return perLayer;
  });
}
