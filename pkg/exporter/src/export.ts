/**
 * Export driver: checkpoint -> RCW file + parity report.
 *
 * Parity compares the framework's per-layer activations against the f64
 * reference forward of the weights after a round trip through the actual
 * RCW bytes, so the report covers exactly what lands on disk. A deviation
 * above tolerance aborts before any file is written.
 */

import { writeFileSync } from "fs";
import { dirname, join } from "path";

import { ExportError, extractChain, frameworkForward } from "./chain.js";
import {
  fromBinBytes,
  referenceForward,
  saveRcw,
  toBinBytes,
  totalNeurons,
  widths,
  type RcwNetwork,
} from "./rcw.js";
import { uniformMatrix } from "./rng.js";
import { loadModelDir } from "./tfio.js";

export interface ExportSpec {
  ckptPath: string;
  layerNames: string[];
  outPath: string;
  samples?: number;
  seed?: number;
  tolerance?: number;
}

export interface ParityReport {
  samples: number;
  seed: number;
  tolerance: number;
  maxAbsDeviation: number;
  perLayerMax: number[];
  layers: string[];
  totalNeurons: number;
  ok: boolean;
}

export interface ExportResult {
  net: RcwNetwork;
  report: ParityReport;
  rcwPath: string;
  parityPath: string;
}

export async function exportCheckpoint(spec: ExportSpec): Promise<ExportResult> {
  const samples = spec.samples ?? 100;
  const seed = spec.seed ?? 0;
  const tolerance = spec.tolerance ?? 1e-5;
  if (samples < 1) {
    throw new ExportError(`samples must be >= 1, got ${samples}`);
  }

  const model = await loadModelDir(spec.ckptPath);
  const extracted = extractChain(model, spec.layerNames);
  // round-trip through the wire format before checking anything
  const net = fromBinBytes(toBinBytes(extracted));

  const inputs = uniformMatrix(samples, net.inputDim, -2.0, 2.0, seed);
  const framework = frameworkForward(model, spec.layerNames, inputs);

  const perLayerMax = new Array(net.layers.length).fill(0);
  for (let s = 0; s < samples; s++) {
    const reference = referenceForward(net, inputs[s]);
    for (let k = 0; k < net.layers.length; k++) {
      const fw = framework[k][s];
      const ref = reference[k];
      for (let j = 0; j < ref.length; j++) {
        const dev = Math.abs(fw[j] - ref[j]);
        if (dev > perLayerMax[k]) {
          perLayerMax[k] = dev;
        }
      }
    }
  }
  const maxAbsDeviation = Math.max(...perLayerMax);
  const report: ParityReport = {
    samples,
    seed,
    tolerance,
    maxAbsDeviation,
    perLayerMax,
    layers: spec.layerNames,
    totalNeurons: totalNeurons(net),
    ok: maxAbsDeviation <= tolerance,
  };

  if (!report.ok) {
    throw new ExportError(
      `parity check failed: max deviation ${maxAbsDeviation.toExponential(3)} ` +
        `exceeds ${tolerance} over ${samples} inputs; refusing to write ${spec.outPath}`,
    );
  }

  saveRcw(net, spec.outPath);
  const parityPath = join(dirname(spec.outPath), "parity.json");
  writeFileSync(parityPath, JSON.stringify(report, null, 1) + "\n", "utf8");
  return { net, report, rcwPath: spec.outPath, parityPath };
}

export function describeNetwork(net: RcwNetwork): string {
  return `input_dim ${net.inputDim}, widths [${widths(net).join(", ")}], N=${totalNeurons(net)}`;
}
