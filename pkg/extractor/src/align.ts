/**
 * Sub-token to token alignment: every pipeline token gets the average of
 * the contextual vectors of all sub-tokens whose character range overlaps
 * it. A token no sub-token covers gets the zero vector and is reported
 * back so callers can warn.
 */

export interface CharRange {
  begin: number;
  end: number;
}

export interface SubTokenVector extends CharRange {
  vector: number[];
}

export function alignSubTokens(
  tokens: CharRange[],
  subTokens: SubTokenVector[],
  dim: number,
): { vectors: number[][]; misses: number[] } {
  const vectors: number[][] = [];
  const misses: number[] = [];
  tokens.forEach((token, index) => {
    const acc = new Array<number>(dim).fill(0);
    let count = 0;
    for (const sub of subTokens) {
      if (sub.begin < token.end && token.begin < sub.end) {
        for (let i = 0; i < dim; i++) acc[i] += sub.vector[i];
        count += 1;
      }
    }
    if (count === 0) {
      misses.push(index);
    } else {
      for (let i = 0; i < dim; i++) acc[i] /= count;
    }
    vectors.push(acc);
  });
  return { vectors, misses };
}
