/** Small deterministic PRNG (mulberry32) so parity inputs are replayable. */

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function uniformMatrix(
  rows: number,
  cols: number,
  lo: number,
  hi: number,
  seed: number,
): number[][] {
  const next = mulberry32(seed);
  const out: number[][] = [];
  for (let r = 0; r < rows; r++) {
    const row: number[] = new Array(cols);
    for (let c = 0; c < cols; c++) {
      row[c] = lo + (hi - lo) * next();
    }
    out.push(row);
  }
  return out;
}
