#!/usr/bin/env node

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { ExportError } from "./chain.js";
import { describeNetwork, exportCheckpoint } from "./export.js";
import { RcwFormatError } from "./rcw.js";

async function main(): Promise<number> {
  const argv = await yargs(hideBin(process.argv))
    .command("export", "export a Dense ReLU chain to an RCW weight file")
    .demandCommand(1)
    .option("ckpt", { type: "string", demandOption: true, describe: "checkpoint directory (model.json + weights.bin)" })
    .option("layers", { type: "string", demandOption: true, describe: "comma-separated layer names forming the chain" })
    .option("out", { type: "string", demandOption: true, describe: "output path; .json suffix selects the JSON form" })
    .option("samples", { type: "number", default: 100, describe: "parity-check input count" })
    .option("seed", { type: "number", default: 0, describe: "parity-check input seed" })
    .strict()
    .parse();

  try {
    const result = await exportCheckpoint({
      ckptPath: argv.ckpt,
      layerNames: argv.layers.split(",").map((s) => s.trim()).filter((s) => s !== ""),
      outPath: argv.out,
      samples: argv.samples,
      seed: argv.seed,
    });
    console.log(`wrote ${result.rcwPath} (${describeNetwork(result.net)})`);
    console.log(
      `parity: max deviation ${result.report.maxAbsDeviation.toExponential(3)} ` +
        `over ${result.report.samples} inputs -> ${result.parityPath}`,
    );
    return 0;
  } catch (e) {
    if (e instanceof ExportError || e instanceof RcwFormatError) {
      console.error(`export error: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

main().then((code) => {
  process.exitCode = code;
});
