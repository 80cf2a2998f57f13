/**
 * Contextual embeddings from a pretrained transformer. The dependency is
 * imported lazily: the rest of the extractor works without it, and a
 * missing install produces one instructive error instead of a stack trace.
 *
 * Token vectors come from the final hidden layer, pooled onto pipeline
 * tokens by character-overlap averaging; sequence vectors use the
 * dedicated classification position of the final layer, truncated at the
 * configured sub-token budget.
 */

import { alignSubTokens } from "./align.js";
import { Embedder, ModelUnavailableError, TokenVectors } from "./embedders.js";

export class HfEmbedder implements Embedder {
  readonly name: string;

  private constructor(
    private extractor: any,
    private tokenizer: any,
    readonly dim: number,
    modelName: string,
  ) {
    this.name = `hf:${modelName}`;
  }

  static async create(modelName: string): Promise<HfEmbedder> {
    let transformers: any;
    try {
      transformers = await import("@huggingface/transformers" as string);
    } catch {
      throw new ModelUnavailableError(
        "contextual embeddings need the optional dependency " +
          "@huggingface/transformers; install it (npm install " +
          "@huggingface/transformers) or use hash:<dim> / static:<path>",
      );
    }
    const tokenizer = await transformers.AutoTokenizer.from_pretrained(modelName);
    const extractor = await transformers.pipeline("feature-extraction", modelName);
    const probe = await extractor("probe", { pooling: "none" });
    const dim = probe.dims[probe.dims.length - 1];
    return new HfEmbedder(extractor, tokenizer, dim, modelName);
  }

  private async subTokenVectors(text: string) {
    const encoded = this.tokenizer(text, { return_offsets_mapping: true });
    const output = await this.extractor(text, { pooling: "none" });
    const [tokens, width] = [output.dims[output.dims.length - 2], output.dims[output.dims.length - 1]];
    const data = output.data as Float32Array;
    const offsets: Array<[number, number]> = encoded.offset_mapping ?? [];
    const subTokens = [];
    for (let t = 0; t < tokens && t < offsets.length; t++) {
      const [begin, end] = offsets[t];
      if (begin === end) continue; // special positions carry no characters
      subTokens.push({
        begin,
        end,
        vector: Array.from(data.slice(t * width, (t + 1) * width)),
      });
    }
    return subTokens;
  }

  async embedTokens(
    words: string[],
    offsets?: Array<[number, number]>,
    text?: string,
  ): Promise<TokenVectors> {
    if (!offsets || text === undefined) {
      throw new Error("contextual token embeddings need offsets and source text");
    }
    const subTokens = await this.subTokenVectors(text);
    const tokens = offsets.map(([begin, end]) => ({ begin, end }));
    return alignSubTokens(tokens, subTokens, this.dim);
  }

  async embedSequence(text: string, maxSubTokens: number) {
    const ids = this.tokenizer.encode(text);
    const truncated = ids.length > maxSubTokens;
    const output = await this.extractor(text, { pooling: "none" });
    const width = output.dims[output.dims.length - 1];
    const data = output.data as Float32Array;
    // position 0 is the classification token of the final layer
    return { vector: Array.from(data.slice(0, width)), truncated };
  }
}
