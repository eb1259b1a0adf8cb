import { mkdtempSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import {
  RcwFormatError,
  fromBinBytes,
  fromJsonString,
  loadRcw,
  referenceForward,
  saveRcw,
  toBinBytes,
  toJsonString,
  totalNeurons,
  widths,
  type RcwNetwork,
} from "../src/rcw.js";

const identity2: RcwNetwork = {
  inputDim: 2,
  layers: [{ weights: [[1, 0], [0, 1]], bias: [0, 0] }],
};

const twoLayer: RcwNetwork = {
  inputDim: 2,
  layers: [
    { weights: [[0.5, -1.25], [3.5, 0.001], [-2, 7]], bias: [0.1, -0.2, 0] },
    { weights: [[1, 2, 3]], bias: [-4.75] },
  ],
};

describe("binary format", () => {
  it("round-trips byte-identically", () => {
    const bytes = toBinBytes(twoLayer);
    const again = toBinBytes(fromBinBytes(bytes));
    expect(again.equals(bytes)).toBe(true);
  });

  it("has the declared header layout", () => {
    const bytes = toBinBytes(identity2);
    expect(bytes.toString("ascii", 0, 4)).toBe("RCW1");
    expect(bytes.readUInt32LE(4)).toBe(2); // input_dim
    expect(bytes.readUInt32LE(8)).toBe(1); // n_layers
    expect(bytes.readUInt32LE(12)).toBe(2); // rows
    expect(bytes.readUInt32LE(16)).toBe(2); // cols
    expect(bytes.readDoubleLE(20)).toBe(1);
    expect(bytes.length).toBe(20 + 8 * 4 + 8 * 2);
  });

  it("rejects truncation", () => {
    const bytes = toBinBytes(twoLayer);
    expect(() => fromBinBytes(bytes.subarray(0, bytes.length - 4))).toThrow(/truncated/);
  });

  it("rejects trailing bytes", () => {
    const bytes = Buffer.concat([toBinBytes(identity2), Buffer.from([0])]);
    expect(() => fromBinBytes(bytes)).toThrow(/trailing/);
  });

  it("rejects a bad magic", () => {
    const bytes = toBinBytes(identity2);
    bytes.write("XXXX", 0, "ascii");
    expect(() => fromBinBytes(bytes)).toThrow(/magic/);
  });
});

describe("json format", () => {
  it("round-trips value-identically", () => {
    const text = toJsonString(twoLayer);
    const net = fromJsonString(text);
    expect(net).toEqual(twoLayer);
    expect(toJsonString(net)).toBe(text);
  });

  it("carries the format tag", () => {
    const obj = JSON.parse(toJsonString(identity2));
    expect(obj.format).toBe("rcw-json/1");
    expect(obj.input_dim).toBe(2);
    expect(obj.layers).toHaveLength(1);
  });

  it("rejects a wrong tag", () => {
    expect(() => fromJsonString('{"format":"other/9","input_dim":1,"layers":[]}')).toThrow(
      /format tag/,
    );
  });

  it("rejects invalid JSON", () => {
    expect(() => fromJsonString("{nope")).toThrow(RcwFormatError);
  });
});

describe("validation", () => {
  it("rejects a broken dimension chain", () => {
    const broken: RcwNetwork = {
      inputDim: 2,
      layers: [
        { weights: [[1, 0]], bias: [0] },
        { weights: [[1, 2, 3]], bias: [0] }, // expects 3 inputs, gets 1
      ],
    };
    expect(() => toBinBytes(broken)).toThrow(/expects 3 inputs/);
  });

  it("rejects non-finite weights", () => {
    const bad: RcwNetwork = {
      inputDim: 1,
      layers: [{ weights: [[Number.NaN]], bias: [0] }],
    };
    expect(() => toBinBytes(bad)).toThrow(/non-finite/);
  });

  it("rejects zero layers", () => {
    expect(() => toBinBytes({ inputDim: 1, layers: [] })).toThrow(/at least one/);
  });
});

describe("file dispatch", () => {
  it("selects format by suffix and loads either", () => {
    const dir = mkdtempSync(join(tmpdir(), "rcw-"));
    saveRcw(twoLayer, join(dir, "net.rcw"));
    saveRcw(twoLayer, join(dir, "net.json"));
    expect(loadRcw(join(dir, "net.rcw"))).toEqual(twoLayer);
    expect(loadRcw(join(dir, "net.json"))).toEqual(twoLayer);
  });
});

describe("reference forward", () => {
  it("matches the hand-computed identity net", () => {
    expect(referenceForward(identity2, [1, 2])).toEqual([[1, 2]]);
    expect(referenceForward(identity2, [-1, 2])).toEqual([[0, 2]]);
    expect(referenceForward(identity2, [-1, -1])).toEqual([[0, 0]]);
  });

  it("applies relu between layers", () => {
    const net: RcwNetwork = {
      inputDim: 1,
      layers: [
        { weights: [[1], [-1]], bias: [0, 0] },
        { weights: [[1, 1]], bias: [0] },
      ],
    };
    // x=2: layer1 (2, 0) -> layer2 2; x=-3: layer1 (0, 3) -> 3
    expect(referenceForward(net, [2])).toEqual([[2, 0], [2]]);
    expect(referenceForward(net, [-3])).toEqual([[0, 3], [3]]);
  });

  it("rejects a wrong input size", () => {
    expect(() => referenceForward(identity2, [1])).toThrow(/expects 2/);
  });
});

describe("helpers", () => {
  it("reports widths and neuron count", () => {
    expect(widths(twoLayer)).toEqual([3, 1]);
    expect(totalNeurons(twoLayer)).toBe(4);
  });
});
