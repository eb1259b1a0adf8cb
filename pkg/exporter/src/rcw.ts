/**
 * RCW weight-file formats.
 *
 * Binary: magic "RCW1", u32 input_dim, u32 n_layers, then per layer
 * u32 rows, u32 cols, rows*cols f64 weights (row-major), rows f64 bias.
 * Everything little-endian. JSON: format tag "rcw-json/1" with the same
 * content as plain arrays. Weights are always f64 on disk regardless of
 * the source precision.
 */

import { readFileSync, writeFileSync } from "fs";

export const BIN_MAGIC = "RCW1";
export const JSON_FORMAT_TAG = "rcw-json/1";

export interface RcwLayer {
  /** (fanOut, fanIn) row-major, one row per neuron */
  weights: number[][];
  bias: number[];
}

export interface RcwNetwork {
  inputDim: number;
  layers: RcwLayer[];
}

export class RcwFormatError extends Error {}

export function validateNetwork(net: RcwNetwork): void {
  if (!Number.isInteger(net.inputDim) || net.inputDim < 1) {
    throw new RcwFormatError(`input_dim must be a positive integer, got ${net.inputDim}`);
  }
  if (net.layers.length === 0) {
    throw new RcwFormatError("network needs at least one layer");
  }
  let fanIn = net.inputDim;
  net.layers.forEach((layer, k) => {
    const rows = layer.weights.length;
    if (rows === 0) {
      throw new RcwFormatError(`layer ${k} has no rows`);
    }
    const cols = layer.weights[0].length;
    if (cols !== fanIn) {
      throw new RcwFormatError(
        `layer ${k} expects ${cols} inputs, previous layer provides ${fanIn}`,
      );
    }
    for (const row of layer.weights) {
      if (row.length !== cols) {
        throw new RcwFormatError(`layer ${k} has ragged weight rows`);
      }
      for (const v of row) {
        if (!Number.isFinite(v)) {
          throw new RcwFormatError(`layer ${k} has a non-finite weight`);
        }
      }
    }
    if (layer.bias.length !== rows) {
      throw new RcwFormatError(
        `layer ${k} bias has ${layer.bias.length} entries for ${rows} rows`,
      );
    }
    for (const v of layer.bias) {
      if (!Number.isFinite(v)) {
        throw new RcwFormatError(`layer ${k} has a non-finite bias`);
      }
    }
    fanIn = rows;
  });
}

export function widths(net: RcwNetwork): number[] {
  return net.layers.map((l) => l.weights.length);
}

export function totalNeurons(net: RcwNetwork): number {
  return widths(net).reduce((a, b) => a + b, 0);
}

export function toBinBytes(net: RcwNetwork): Buffer {
  validateNetwork(net);
  let size = 4 + 8;
  for (const layer of net.layers) {
    const rows = layer.weights.length;
    const cols = layer.weights[0].length;
    size += 8 + 8 * rows * cols + 8 * rows;
  }
  const buf = Buffer.alloc(size);
  buf.write(BIN_MAGIC, 0, "ascii");
  let pos = 4;
  pos = buf.writeUInt32LE(net.inputDim, pos);
  pos = buf.writeUInt32LE(net.layers.length, pos);
  for (const layer of net.layers) {
    const rows = layer.weights.length;
    const cols = layer.weights[0].length;
    pos = buf.writeUInt32LE(rows, pos);
    pos = buf.writeUInt32LE(cols, pos);
    for (const row of layer.weights) {
      for (const v of row) {
        pos = buf.writeDoubleLE(v, pos);
      }
    }
    for (const v of layer.bias) {
      pos = buf.writeDoubleLE(v, pos);
    }
  }
  return buf;
}

export function fromBinBytes(data: Buffer): RcwNetwork {
  const need = (pos: number, count: number, what: string) => {
    if (pos + count > data.length) {
      throw new RcwFormatError(`truncated RCW-BIN file while reading ${what} (at byte ${pos})`);
    }
  };
  if (data.toString("ascii", 0, 4) !== BIN_MAGIC) {
    throw new RcwFormatError("bad magic, expected RCW1");
  }
  let pos = 4;
  need(pos, 8, "header");
  const inputDim = data.readUInt32LE(pos);
  const nLayers = data.readUInt32LE(pos + 4);
  pos += 8;
  if (nLayers === 0) {
    throw new RcwFormatError("file declares zero layers");
  }
  const layers: RcwLayer[] = [];
  for (let k = 0; k < nLayers; k++) {
    need(pos, 8, `layer ${k} shape`);
    const rows = data.readUInt32LE(pos);
    const cols = data.readUInt32LE(pos + 4);
    pos += 8;
    need(pos, 8 * rows * cols, `layer ${k} weights`);
    const weights: number[][] = [];
    for (let r = 0; r < rows; r++) {
      const row: number[] = new Array(cols);
      for (let c = 0; c < cols; c++) {
        row[c] = data.readDoubleLE(pos);
        pos += 8;
      }
      weights.push(row);
    }
    need(pos, 8 * rows, `layer ${k} bias`);
    const bias: number[] = new Array(rows);
    for (let r = 0; r < rows; r++) {
      bias[r] = data.readDoubleLE(pos);
      pos += 8;
    }
    layers.push({ weights, bias });
  }
  if (pos !== data.length) {
    throw new RcwFormatError(`${data.length - pos} trailing bytes after last layer`);
  }
  const net = { inputDim, layers };
  validateNetwork(net);
  return net;
}

export function toJsonString(net: RcwNetwork): string {
  validateNetwork(net);
  const obj = {
    format: JSON_FORMAT_TAG,
    input_dim: net.inputDim,
    layers: net.layers.map((l) => ({ weights: l.weights, bias: l.bias })),
  };
  return JSON.stringify(obj) + "\n";
}

export function fromJsonString(text: string): RcwNetwork {
  let obj: any;
  try {
    obj = JSON.parse(text);
  } catch (e: any) {
    throw new RcwFormatError(`invalid JSON: ${e.message}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new RcwFormatError("top level must be a JSON object");
  }
  if (obj.format !== JSON_FORMAT_TAG) {
    throw new RcwFormatError(
      `unsupported format tag ${JSON.stringify(obj.format)}, expected "${JSON_FORMAT_TAG}"`,
    );
  }
  if (!Number.isInteger(obj.input_dim) || !Array.isArray(obj.layers)) {
    throw new RcwFormatError("missing required keys input_dim/layers");
  }
  const layers: RcwLayer[] = obj.layers.map((entry: any, k: number) => {
    if (typeof entry !== "object" || !entry.weights || !entry.bias) {
      throw new RcwFormatError(`layer ${k} needs weights and bias`);
    }
    return { weights: entry.weights, bias: entry.bias };
  });
  const net = { inputDim: obj.input_dim, layers };
  validateNetwork(net);
  return net;
}

/** Format by suffix: .json writes the JSON form, everything else binary. */
export function saveRcw(net: RcwNetwork, path: string): void {
  if (path.endsWith(".json")) {
    writeFileSync(path, toJsonString(net), "utf8");
  } else {
    writeFileSync(path, toBinBytes(net));
  }
}

export function loadRcw(path: string): RcwNetwork {
  const data = readFileSync(path);
  if (data.length >= 4 && data.toString("ascii", 0, 4) === BIN_MAGIC) {
    return fromBinBytes(data);
  }
  return fromJsonString(data.toString("utf8"));
}

/** Per-layer post-ReLU activations of the f64 reference forward pass. */
export function referenceForward(net: RcwNetwork, x: number[]): number[][] {
  if (x.length !== net.inputDim) {
    throw new RcwFormatError(`input has ${x.length} entries, network expects ${net.inputDim}`);
  }
  const out: number[][] = [];
  let h = x;
  for (const layer of net.layers) {
    const next: number[] = new Array(layer.weights.length);
    for (let r = 0; r < layer.weights.length; r++) {
      let acc = layer.bias[r];
      const row = layer.weights[r];
      for (let c = 0; c < row.length; c++) {
        acc += row[c] * h[c];
      }
      next[r] = acc > 0 ? acc : 0;
    }
    out.push(next);
    h = next;
  }
  return out;
}
