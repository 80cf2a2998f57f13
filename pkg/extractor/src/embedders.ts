/**
 * Embedding backends.
 *
 * - `hash:<dim>` — deterministic pseudo-embeddings for offline runs and
 *   integration tests; no model download needed.
 * - `static:<path>` — a word-vector table (`word v1 ... vd` per line);
 *   out-of-vocabulary tokens get the zero vector.
 * - `hf:<model>` — contextual vectors from a pretrained transformer via
 *   @huggingface/transformers, loaded lazily so the package works without
 *   the dependency installed.
 */

import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

export interface TokenVectors {
  vectors: number[][];
  /** token indices that no sub-token covered (hf mode only) */
  misses: number[];
}

export interface Embedder {
  readonly dim: number;
  readonly name: string;
  /** One vector per token; offsets index the fragment's source text. */
  embedTokens(words: string[], offsets?: Array<[number, number]>, text?: string): Promise<TokenVectors>;
  /** One summary vector for a whole instance text. */
  embedSequence(text: string, maxSubTokens: number): Promise<{ vector: number[]; truncated: boolean }>;
}

export class ModelUnavailableError extends Error {}

function hashUnit(key: string): number {
  const digest = createHash("sha256").update(key, "utf-8").digest();
  const value = digest.readBigUInt64BE(0);
  return (Number(value) / Number(2n ** 64n - 1n)) * 2 - 1;
}

export class HashEmbedder implements Embedder {
  readonly name: string;

  constructor(readonly dim: number, readonly seed: number = 0) {
    this.name = `hash:${dim}`;
  }

  vectorFor(word: string): number[] {
    const key = word.toLowerCase();
    const out = new Array<number>(this.dim);
    for (let i = 0; i < this.dim; i++) {
      out[i] = hashUnit(`${key}${i}${this.seed}`);
    }
    return out;
  }

  async embedTokens(words: string[]): Promise<TokenVectors> {
    return { vectors: words.map((w) => this.vectorFor(w)), misses: [] };
  }

  async embedSequence(text: string, maxSubTokens: number) {
    const words = text.split(/\s+/u).filter(Boolean);
    const truncated = words.length > maxSubTokens;
    const kept = truncated ? words.slice(0, maxSubTokens) : words;
    const vector = new Array<number>(this.dim).fill(0);
    for (const word of kept) {
      const v = this.vectorFor(word);
      for (let i = 0; i < this.dim; i++) vector[i] += v[i];
    }
    if (kept.length > 0) {
      const scale = 1 / Math.sqrt(kept.length);
      for (let i = 0; i < this.dim; i++) vector[i] *= scale;
    }
    return { vector, truncated };
  }
}

export class StaticEmbedder implements Embedder {
  readonly dim: number;
  readonly name: string;
  private table = new Map<string, number[]>();

  constructor(tablePath: string) {
    this.name = `static:${tablePath}`;
    let dim = 0;
    for (const line of readFileSync(tablePath, "utf-8").split("\n")) {
      if (!line.trim()) continue;
      const parts = line.trim().split(/\s+/);
      const vector = parts.slice(1).map(Number);
      if (vector.some((v) => !Number.isFinite(v))) {
        throw new Error(`${tablePath}: non-finite value for ${parts[0]}`);
      }
      if (dim === 0) dim = vector.length;
      if (vector.length !== dim) {
        throw new Error(`${tablePath}: inconsistent vector width for ${parts[0]}`);
      }
      this.table.set(parts[0].toLowerCase(), vector);
    }
    if (dim === 0) throw new Error(`${tablePath}: empty vector table`);
    this.dim = dim;
  }

  vectorFor(word: string): number[] {
    return this.table.get(word.toLowerCase()) ?? new Array<number>(this.dim).fill(0);
  }

  async embedTokens(words: string[]): Promise<TokenVectors> {
    return { vectors: words.map((w) => this.vectorFor(w)), misses: [] };
  }

  async embedSequence(text: string, maxSubTokens: number) {
    const words = text.split(/\s+/u).filter(Boolean);
    const truncated = words.length > maxSubTokens;
    const kept = truncated ? words.slice(0, maxSubTokens) : words;
    const vector = new Array<number>(this.dim).fill(0);
    let used = 0;
    for (const word of kept) {
      const v = this.vectorFor(word);
      for (let i = 0; i < this.dim; i++) vector[i] += v[i];
      used += 1;
    }
    if (used > 0) {
      for (let i = 0; i < this.dim; i++) vector[i] /= used;
    }
    return { vector, truncated };
  }
}

export async function createEmbedder(spec: string, seed: number): Promise<Embedder> {
  if (spec.startsWith("hash:")) {
    const dim = Number(spec.slice(5));
    if (!Number.isInteger(dim) || dim < 1) {
      throw new Error(`bad hash dimension in ${spec}`);
    }
    return new HashEmbedder(dim, seed);
  }
  if (spec.startsWith("static:")) {
    return new StaticEmbedder(spec.slice(7));
  }
  if (spec.startsWith("hf:")) {
    const { HfEmbedder } = await import("./hf.js");
    return HfEmbedder.create(spec.slice(3));
  }
  throw new Error(`unknown model spec ${spec}; use hash:<dim>, static:<path> or hf:<model>`);
}
