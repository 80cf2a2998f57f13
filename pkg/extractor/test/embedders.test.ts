import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { alignSubTokens } from "../src/align.js";
import { createEmbedder, HashEmbedder, StaticEmbedder } from "../src/embedders.js";
import { headLogits, trainLinearHead } from "../src/head.js";
import { repPreprocess, repeatCount, normalizeSpanText } from "../src/reptext.js";

describe("HashEmbedder", () => {
  it("is deterministic and case-insensitive", async () => {
    const embedder = new HashEmbedder(8, 3);
    const a = await embedder.embedTokens(["Word"]);
    const b = await embedder.embedTokens(["word"]);
    expect(a.vectors[0]).toEqual(b.vectors[0]);
  });

  it("stays within [-1, 1]", async () => {
    const embedder = new HashEmbedder(16);
    const { vectors } = await embedder.embedTokens(["alpha", "beta", "?"]);
    for (const vector of vectors) {
      for (const v of vector) {
        expect(v).toBeGreaterThanOrEqual(-1);
        expect(v).toBeLessThanOrEqual(1);
      }
    }
  });

  it("differs across seeds for some word", async () => {
    const words = Array.from({ length: 50 }, (_, i) => `w${i}`);
    const a = await new HashEmbedder(4, 0).embedTokens(words);
    const b = await new HashEmbedder(4, 1).embedTokens(words);
    const anyDiff = words.some((_, i) =>
      a.vectors[i].some((v, j) => v !== b.vectors[i][j]),
    );
    expect(anyDiff).toBe(true);
  });

  it("distinguishes duplicated sequences", async () => {
    const embedder = new HashEmbedder(8);
    const single = await embedder.embedSequence("war", 200);
    const doubled = await embedder.embedSequence("war war", 200);
    expect(doubled.vector).not.toEqual(single.vector);
  });

  it("flags truncation past the sub-token budget", async () => {
    const embedder = new HashEmbedder(4);
    const text = Array.from({ length: 500 }, (_, i) => `w${i}`).join(" ");
    const { truncated } = await embedder.embedSequence(text, 200);
    expect(truncated).toBe(true);
  });
});

describe("StaticEmbedder", () => {
  function table(): string {
    const dir = mkdtempSync(join(tmpdir(), "vecs-"));
    const path = join(dir, "vectors.txt");
    writeFileSync(path, "alpha 1 0 0\nbeta 0 1 0\ngamma 0 0 1\n");
    return path;
  }

  it("looks up known words", async () => {
    const embedder = new StaticEmbedder(table());
    expect(embedder.dim).toBe(3);
    const { vectors } = await embedder.embedTokens(["Alpha", "beta"]);
    expect(vectors[0]).toEqual([1, 0, 0]);
    expect(vectors[1]).toEqual([0, 1, 0]);
  });

  it("gives the zero vector to OOV tokens", async () => {
    const embedder = new StaticEmbedder(table());
    const { vectors } = await embedder.embedTokens(["missing"]);
    expect(vectors[0]).toEqual([0, 0, 0]);
  });
});

describe("createEmbedder", () => {
  it("parses hash specs", async () => {
    const embedder = await createEmbedder("hash:12", 0);
    expect(embedder.dim).toBe(12);
  });

  it("rejects unknown specs", async () => {
    await expect(createEmbedder("magic:3", 0)).rejects.toThrow(/unknown model spec/);
  });
});

describe("alignSubTokens", () => {
  it("averages overlapping sub-token vectors", () => {
    const tokens = [{ begin: 0, end: 6 }];
    const subTokens = [
      { begin: 0, end: 3, vector: [2, 0] },
      { begin: 3, end: 6, vector: [0, 2] },
      { begin: 7, end: 9, vector: [9, 9] },
    ];
    const { vectors, misses } = alignSubTokens(tokens, subTokens, 2);
    expect(vectors[0]).toEqual([1, 1]);
    expect(misses).toEqual([]);
  });

  it("reports tokens nothing covers and zero-fills them", () => {
    const tokens = [{ begin: 0, end: 2 }, { begin: 5, end: 8 }];
    const subTokens = [{ begin: 0, end: 2, vector: [1, 1] }];
    const { vectors, misses } = alignSubTokens(tokens, subTokens, 2);
    expect(misses).toEqual([1]);
    expect(vectors[1]).toEqual([0, 0]);
  });
});

describe("repetition preprocessing", () => {
  it("appends a copy for train-phase repetition labels", () => {
    expect(repPreprocess("war", "war is war", "train", true)).toBe("war war");
    expect(repPreprocess("war", "war is war", "train", false)).toBe("war");
  });

  it("duplicates repeated spans at inference", () => {
    expect(repPreprocess("war", "war today. war tomorrow.", "infer", false)).toBe("war war");
    expect(repPreprocess("peace", "peace today. war tomorrow.", "infer", false)).toBe("peace");
  });

  it("normalizes before counting", () => {
    expect(normalizeSpanText("  War! ")).toBe("war");
    expect(repeatCount("War! Later they said war again.", "War!")).toBe(1);
  });
});

describe("trainLinearHead", () => {
  it("overfits a separable toy set and dumps 14-wide logits", () => {
    const x: number[][] = [];
    const y: number[] = [];
    for (let i = 0; i < 20; i++) {
      const cls = i % 4;
      const row = new Array<number>(8).fill(0);
      row[cls * 2] = 1 + (i % 3) * 0.1;
      x.push(row);
      y.push(cls);
    }
    const head = trainLinearHead(x, y, 14, {
      epochs: 200, learningRate: 0.05, batchSize: 12, seed: 1,
    });
    const logits = headLogits(head, x);
    expect(logits[0]).toHaveLength(14);
    const correct = logits.filter(
      (row, i) => row.indexOf(Math.max(...row)) === y[i],
    ).length;
    expect(correct).toBe(x.length);
  });

  it("is deterministic under a fixed seed", () => {
    const x = [[1, 0], [0, 1], [1, 1]];
    const y = [0, 1, 2];
    const config = { epochs: 10, learningRate: 0.05, batchSize: 2, seed: 9 };
    const a = trainLinearHead(x, y, 3, config);
    const b = trainLinearHead(x, y, 3, config);
    expect(a).toEqual(b);
  });
});
