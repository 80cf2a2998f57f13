/**
 * POS and named-entity annotation files for the pipeline's features.
 *
 * The pipeline consumes `article_id\tbegin\tend\ttag` rows keyed by token
 * begin offsets, so tokenization here must reproduce its fixed rules
 * (corpus.tokenize does). Tag sources:
 *
 * - `gazetteer:<path>` — entity phrases from a TSV (`surface\tTYPE`) plus
 *   the rule POS tagger; works offline.
 * - `hf:<model>` — a pretrained token-classification model, loaded lazily.
 */

import { readFileSync } from "node:fs";

import { Token, tokenize } from "./corpus.js";
import { ModelUnavailableError } from "./embedders.js";

export const POS_TAGS = [
  "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM",
  "CONJ", "PRT", "PUNCT", "PROPN", "AUX", "INTJ", "X",
] as const;

export type PosTag = (typeof POS_TAGS)[number];

export const NE_TYPES = new Set([
  "NORP", "GPE", "ORG", "PERSON", "CARDINAL", "DATE",
]);

/** Map a Universal Dependencies tag onto the pipeline's 15-tag set. */
export function mapUposTag(tag: string): PosTag {
  switch (tag) {
    case "CCONJ":
    case "SCONJ":
      return "CONJ";
    case "PART":
      return "PRT";
    case "SYM":
    case "SPACE":
      return "X";
    default:
      return (POS_TAGS as readonly string[]).includes(tag) ? (tag as PosTag) : "X";
  }
}

const CLOSED_CLASS: Array<[Set<string>, PosTag]> = [
  [new Set(["is", "am", "are", "was", "were", "be", "been", "being", "have", "has",
            "had", "do", "does", "did", "will", "would", "shall", "should", "can",
            "could", "may", "might", "must"]), "AUX"],
  [new Set(["i", "you", "he", "she", "it", "we", "they", "me", "him", "her", "us",
            "them", "my", "your", "his", "its", "our", "their", "who", "whom",
            "whose"]), "PRON"],
  [new Set(["the", "a", "an", "this", "that", "these", "those", "each", "every",
            "some", "any", "no", "all", "both"]), "DET"],
  [new Set(["in", "on", "at", "by", "with", "from", "to", "of", "for", "about",
            "against", "between", "into", "through", "during", "before", "after",
            "over", "under"]), "ADP"],
  [new Set(["and", "or", "but", "nor", "so", "yet", "because", "although",
            "while", "if", "since"]), "CONJ"],
  [new Set(["not", "n't"]), "PRT"],
  [new Set(["very", "too", "also", "now", "then", "here", "there", "never",
            "always", "often"]), "ADV"],
  [new Set(["oh", "wow", "hey", "ah", "yes"]), "INTJ"],
];

export function rulePosTag(token: Token, isInitial: boolean): PosTag {
  const text = token.text;
  if (!/[\p{L}\p{N}]/u.test(text)) return "PUNCT";
  if (/^[0-9.,-]+$/.test(text) && /[0-9]/.test(text)) return "NUM";
  if (/^\p{Lu}/u.test(text) && !isInitial) return "PROPN";
  const word = text.toLowerCase();
  for (const [words, tag] of CLOSED_CLASS) {
    if (words.has(word)) return tag;
  }
  return "NOUN";
}

export interface Gazetteer {
  /** phrase word sequences (lowercased) per entity type */
  phrases: Array<{ words: string[]; type: string }>;
}

export function loadGazetteer(path: string): Gazetteer {
  const phrases: Gazetteer["phrases"] = [];
  readFileSync(path, "utf-8").split("\n").forEach((line, i) => {
    if (!line.trim() || line.startsWith("#")) return;
    const [surface, type] = line.split("\t");
    if (!surface || !type) {
      throw new Error(`${path}:${i + 1}: expected surface\ttype`);
    }
    if (!NE_TYPES.has(type)) {
      throw new Error(`${path}:${i + 1}: unknown entity type ${type}`);
    }
    phrases.push({
      words: tokenize(surface.toLowerCase()).map((t) => t.text),
      type,
    });
  });
  return { phrases };
}

export interface AnnotationRow {
  articleId: string;
  begin: number;
  end: number;
  tag: string;
}

export function annotateArticle(
  articleId: string,
  text: string,
  gazetteer: Gazetteer,
): { pos: AnnotationRow[]; ne: AnnotationRow[] } {
  const tokens = tokenize(text);
  const pos = tokens.map((token, i) => ({
    articleId,
    begin: token.begin,
    end: token.end,
    tag: rulePosTag(token, i === 0) as string,
  }));
  const ne: AnnotationRow[] = [];
  const lowered = tokens.map((t) => t.text.toLowerCase());
  for (const { words, type } of gazetteer.phrases) {
    if (words.length === 0 || words.length > tokens.length) continue;
    for (let i = 0; i + words.length <= tokens.length; i++) {
      let hit = true;
      for (let j = 0; j < words.length; j++) {
        if (lowered[i + j] !== words[j]) {
          hit = false;
          break;
        }
      }
      if (hit) {
        ne.push({
          articleId,
          begin: tokens[i].begin,
          end: tokens[i + words.length - 1].end,
          tag: type,
        });
      }
    }
  }
  ne.sort((a, b) => a.begin - b.begin || a.end - b.end);
  return { pos, ne };
}

const ENTITY_TYPE_MAP: Record<string, string> = {
  NORP: "NORP", GPE: "GPE", ORG: "ORG", PERSON: "PERSON",
  CARDINAL: "CARDINAL", DATE: "DATE",
  // CoNLL-style labels from generic NER models
  LOC: "GPE", PER: "PERSON", MISC: "NORP",
};

export interface HfTagger {
  annotate(articleId: string, text: string): Promise<{ pos: AnnotationRow[]; ne: AnnotationRow[] }>;
}

/**
 * Pretrained tagger: a token-classification model for entities and an
 * optional second one for POS (UPOS labels, mapped onto the 15-tag set;
 * without one the rule tagger fills in).
 */
export async function createHfTagger(spec: string): Promise<HfTagger> {
  let transformers: any;
  try {
    transformers = await import("@huggingface/transformers" as string);
  } catch {
    throw new ModelUnavailableError(
      "the pretrained tagger needs the optional dependency " +
        "@huggingface/transformers; install it or use gazetteer:<path>",
    );
  }
  const [nerModel, posModel] = spec.split(",");
  const ner = await transformers.pipeline("token-classification", nerModel, {
    aggregation_strategy: "simple",
  });
  const posPipe = posModel
    ? await transformers.pipeline("token-classification", posModel)
    : null;
  return {
    async annotate(articleId: string, text: string) {
      const tokens = tokenize(text);
      let pos: AnnotationRow[];
      if (posPipe) {
        pos = [];
        for (let i = 0; i < tokens.length; i++) {
          const result = await posPipe(tokens[i].text);
          const label = result[0]?.entity?.replace(/^[BI]-/, "") ?? "X";
          pos.push({
            articleId,
            begin: tokens[i].begin,
            end: tokens[i].end,
            tag: mapUposTag(label),
          });
        }
      } else {
        pos = tokens.map((token, i) => ({
          articleId,
          begin: token.begin,
          end: token.end,
          tag: rulePosTag(token, i === 0) as string,
        }));
      }
      const ne: AnnotationRow[] = [];
      for (const entity of await ner(text)) {
        const mapped = ENTITY_TYPE_MAP[entity.entity_group ?? entity.entity];
        if (mapped && Number.isInteger(entity.start) && Number.isInteger(entity.end)) {
          ne.push({ articleId, begin: entity.start, end: entity.end, tag: mapped });
        }
      }
      ne.sort((a, b) => a.begin - b.begin || a.end - b.end);
      return { pos, ne };
    },
  };
}
