/**
 * Linear classification head for the fine-tune mode: softmax regression
 * over sequence embeddings, trained with Adam. Dumping its pre-softmax
 * logits gives a drop-in replacement for the pipeline's own linear stage.
 */

export interface HeadConfig {
  epochs: number;
  learningRate: number;
  batchSize: number;
  seed: number;
}

export interface LinearHead {
  w: number[][]; // dim x classes
  b: number[];
}

/** Deterministic PRNG (mulberry32) so fine-tune runs are reproducible. */
export function rng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function softmaxRow(row: number[]): number[] {
  const max = Math.max(...row);
  const exps = row.map((v) => Math.exp(v - max));
  const total = exps.reduce((a, b) => a + b, 0);
  return exps.map((v) => v / total);
}

export function headLogits(head: LinearHead, x: number[][]): number[][] {
  return x.map((row) => {
    const out = head.b.slice();
    for (let i = 0; i < row.length; i++) {
      const xi = row[i];
      const wi = head.w[i];
      for (let c = 0; c < out.length; c++) out[c] += xi * wi[c];
    }
    return out;
  });
}

export function trainLinearHead(
  x: number[][],
  y: number[],
  nClasses: number,
  config: HeadConfig,
): LinearHead {
  const n = x.length;
  const dim = x[0].length;
  const random = rng(config.seed);
  const radius = 1 / Math.sqrt(dim);
  const w = Array.from({ length: dim }, () =>
    Array.from({ length: nClasses }, () => (random() * 2 - 1) * radius),
  );
  const b = new Array<number>(nClasses).fill(0);
  const mW = w.map((row) => row.map(() => 0));
  const vW = w.map((row) => row.map(() => 0));
  const mB = b.map(() => 0);
  const vB = b.map(() => 0);
  const beta1 = 0.9;
  const beta2 = 0.999;
  const eps = 1e-8;
  let step = 0;

  for (let epoch = 0; epoch < config.epochs; epoch++) {
    const order = Array.from({ length: n }, (_, i) => i);
    for (let i = n - 1; i > 0; i--) {
      const j = Math.floor(random() * (i + 1));
      [order[i], order[j]] = [order[j], order[i]];
    }
    for (let start = 0; start < n; start += config.batchSize) {
      const batch = order.slice(start, start + config.batchSize);
      const gW = w.map((row) => row.map(() => 0));
      const gB = b.map(() => 0);
      for (const idx of batch) {
        const logits = headLogits({ w, b }, [x[idx]])[0];
        const probs = softmaxRow(logits);
        for (let c = 0; c < nClasses; c++) {
          const delta = (probs[c] - (c === y[idx] ? 1 : 0)) / batch.length;
          gB[c] += delta;
          for (let d = 0; d < dim; d++) gW[d][c] += delta * x[idx][d];
        }
      }
      step += 1;
      const c1 = 1 - Math.pow(beta1, step);
      const c2 = 1 - Math.pow(beta2, step);
      for (let d = 0; d < dim; d++) {
        for (let c = 0; c < nClasses; c++) {
          mW[d][c] = beta1 * mW[d][c] + (1 - beta1) * gW[d][c];
          vW[d][c] = beta2 * vW[d][c] + (1 - beta2) * gW[d][c] * gW[d][c];
          w[d][c] -= (config.learningRate * (mW[d][c] / c1)) / (Math.sqrt(vW[d][c] / c2) + eps);
        }
      }
      for (let c = 0; c < nClasses; c++) {
        mB[c] = beta1 * mB[c] + (1 - beta1) * gB[c];
        vB[c] = beta2 * vB[c] + (1 - beta2) * gB[c] * gB[c];
        b[c] -= (config.learningRate * (mB[c] / c1)) / (Math.sqrt(vB[c] / c2) + eps);
      }
    }
  }
  return { w, b };
}
