/**
 * Extractor command line.
 *
 *   tokens     --articles DIR --fragments dump.tsv --model hash:32 --out f.tsv
 *   sequences  --articles DIR --instances inst.tsv --model hash:32 --out f.tsv
 *              [--labeled] [--rep-preprocess train|infer|off]
 *              [--max-subtokens 200] [--fine-tune logits|summary ...]
 *   annotate   --articles DIR --tagger gazetteer:g.tsv --out-pos p.tsv --out-ne n.tsv
 *
 * Exit codes: 0 success, 1 usage, 2 data error, 3 model unavailable.
 */

import { writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import {
  AnnotationRow,
  annotateArticle,
  createHfTagger,
  loadGazetteer,
} from "./annotate.js";
import { readArticles, readFragmentDump, readInstances } from "./corpus.js";
import { createEmbedder, ModelUnavailableError } from "./embedders.js";
import { headLogits, trainLinearHead } from "./head.js";
import { repPreprocess, RepPhase, slicePoints } from "./reptext.js";
import { SeqRow, TokenRow, writeSeqSidecar, writeTokenSidecar } from "./sidecar.js";

const TECHNIQUES = [
  "Loaded_Language", "Name_Calling,Labeling", "Repetition", "Flag-Waving",
  "Exaggeration,Minimisation", "Doubt", "Appeal_to_fear-prejudice", "Slogans",
  "Whataboutism,Straw_Men,Red_Herring", "Black-and-White_Fallacy",
  "Causal_Oversimplification", "Thought-terminating_Cliches",
  "Appeal_to_Authority", "Bandwagon,Reductio_ad_hitlerum",
];

class UsageError extends Error {}

function requireOption(value: string | undefined, name: string): string {
  if (!value) throw new UsageError(`missing required option --${name}`);
  return value;
}

async function cmdTokens(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      articles: { type: "string" },
      fragments: { type: "string" },
      model: { type: "string" },
      seed: { type: "string", default: "0" },
      out: { type: "string" },
    },
  });
  const articlesDir = requireOption(values.articles, "articles");
  const fragmentsPath = requireOption(values.fragments, "fragments");
  const modelSpec = requireOption(values.model, "model");
  const outPath = requireOption(values.out, "out");

  const articles = readArticles(articlesDir);
  const fragments = readFragmentDump(fragmentsPath);
  const embedder = await createEmbedder(modelSpec, Number(values.seed));
  const rows: TokenRow[] = [];
  let missing = 0;
  for (const fragment of fragments) {
    const text = articles.get(fragment.articleId);
    if (text === undefined) {
      throw new Error(`no article file for id ${fragment.articleId}`);
    }
    const words = fragment.tokens.map((t) => t.text);
    const offsets = fragment.tokens.map((t) => [t.begin, t.end] as [number, number]);
    const { vectors, misses } = await embedder.embedTokens(words, offsets, text);
    for (const index of misses) {
      missing += 1;
      process.stderr.write(
        `warning: no sub-token overlaps article ${fragment.articleId} ` +
          `fragment ${fragment.fragmentIndex} token ${index}; zero vector\n`,
      );
    }
    fragment.tokens.forEach((token, index) => {
      rows.push({
        articleId: fragment.articleId,
        fragmentIndex: fragment.fragmentIndex,
        tokenIndex: token.tokenIndex,
        vector: vectors[index],
      });
    });
  }
  writeTokenSidecar(outPath, embedder.dim, rows);
  process.stdout.write(
    `wrote ${rows.length} token vectors (dim ${embedder.dim}) to ${outPath}` +
      (missing ? ` with ${missing} zero-vector tokens\n` : "\n"),
  );
  return 0;
}

async function cmdSequences(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      articles: { type: "string" },
      instances: { type: "string" },
      labeled: { type: "boolean", default: false },
      model: { type: "string" },
      seed: { type: "string", default: "0" },
      "rep-preprocess": { type: "string", default: "off" },
      "max-subtokens": { type: "string", default: "200" },
      "fine-tune": { type: "string" },
      epochs: { type: "string", default: "2" },
      lr: { type: "string", default: "0.01" },
      batch: { type: "string", default: "12" },
      out: { type: "string" },
    },
  });
  const articlesDir = requireOption(values.articles, "articles");
  const instancesPath = requireOption(values.instances, "instances");
  const modelSpec = requireOption(values.model, "model");
  const outPath = requireOption(values.out, "out");
  const phase = values["rep-preprocess"] as RepPhase;
  if (!["train", "infer", "off"].includes(phase)) {
    throw new UsageError(`--rep-preprocess must be train, infer or off, got ${phase}`);
  }
  const maxSubTokens = Number(values["max-subtokens"]);
  const fineTune = values["fine-tune"];
  if (fineTune && !["logits", "summary"].includes(fineTune)) {
    throw new UsageError(`--fine-tune must be logits or summary, got ${fineTune}`);
  }
  if (fineTune === "logits" && !values.labeled) {
    throw new UsageError("--fine-tune logits needs labeled instances");
  }

  const articles = readArticles(articlesDir);
  const instances = readInstances(instancesPath, values.labeled as boolean);
  const embedder = await createEmbedder(modelSpec, Number(values.seed));
  const vectors: number[][] = [];
  for (const inst of instances) {
    const articleText = articles.get(inst.articleId);
    if (articleText === undefined) {
      throw new Error(`no article file for id ${inst.articleId}`);
    }
    const spanText = slicePoints(articleText, inst.begin, inst.end);
    if (!spanText) {
      throw new Error(`instance ${inst.instanceId}: empty span text`);
    }
    const text = repPreprocess(
      spanText, articleText, phase, inst.technique === "Repetition",
    );
    const { vector, truncated } = await embedder.embedSequence(text, maxSubTokens);
    if (truncated) {
      process.stderr.write(
        `warning: instance ${inst.instanceId} truncated at ${maxSubTokens} sub-tokens\n`,
      );
    }
    vectors.push(vector);
  }

  let rows: SeqRow[];
  let dim: number;
  if (fineTune === "logits") {
    const labels = instances.map((inst) => {
      const index = TECHNIQUES.indexOf(inst.technique ?? "");
      if (index < 0) {
        throw new Error(`instance ${inst.instanceId}: unknown technique ${inst.technique}`);
      }
      return index;
    });
    const head = trainLinearHead(vectors, labels, TECHNIQUES.length, {
      epochs: Number(values.epochs),
      learningRate: Number(values.lr),
      batchSize: Number(values.batch),
      seed: Number(values.seed),
    });
    rows = headLogits(head, vectors).map((vector, i) => ({
      instanceId: instances[i].instanceId,
      vector,
    }));
    dim = TECHNIQUES.length;
  } else {
    rows = vectors.map((vector, i) => ({ instanceId: instances[i].instanceId, vector }));
    dim = embedder.dim;
  }
  writeSeqSidecar(outPath, dim, rows);
  process.stdout.write(`wrote ${rows.length} sequence vectors (dim ${dim}) to ${outPath}\n`);
  return 0;
}

function writeAnnotationFile(path: string, rows: AnnotationRow[]): void {
  const lines = rows.map((r) => `${r.articleId}\t${r.begin}\t${r.end}\t${r.tag}`);
  writeFileSync(path, lines.join("\n") + (lines.length ? "\n" : ""), "utf-8");
}

async function cmdAnnotate(argv: string[]): Promise<number> {
  const { values } = parseArgs({
    args: argv,
    options: {
      articles: { type: "string" },
      tagger: { type: "string" },
      "out-pos": { type: "string" },
      "out-ne": { type: "string" },
    },
  });
  const articlesDir = requireOption(values.articles, "articles");
  const taggerSpec = requireOption(values.tagger, "tagger");
  const outPos = requireOption(values["out-pos"], "out-pos");
  const outNe = requireOption(values["out-ne"], "out-ne");

  const articles = readArticles(articlesDir);
  const posRows: AnnotationRow[] = [];
  const neRows: AnnotationRow[] = [];
  if (taggerSpec.startsWith("gazetteer:")) {
    const gazetteer = loadGazetteer(taggerSpec.slice("gazetteer:".length));
    for (const [articleId, text] of articles) {
      const { pos, ne } = annotateArticle(articleId, text, gazetteer);
      posRows.push(...pos);
      neRows.push(...ne);
    }
  } else if (taggerSpec.startsWith("hf:")) {
    const tagger = await createHfTagger(taggerSpec.slice(3));
    for (const [articleId, text] of articles) {
      const { pos, ne } = await tagger.annotate(articleId, text);
      posRows.push(...pos);
      neRows.push(...ne);
    }
  } else {
    throw new UsageError(`unknown tagger ${taggerSpec}; use gazetteer:<path> or hf:<model>`);
  }
  writeAnnotationFile(outPos, posRows);
  writeAnnotationFile(outNe, neRows);
  process.stdout.write(
    `wrote ${posRows.length} POS rows to ${outPos} and ${neRows.length} NE rows to ${outNe}\n`,
  );
  return 0;
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    switch (command) {
      case "tokens":
        return await cmdTokens(rest);
      case "sequences":
        return await cmdSequences(rest);
      case "annotate":
        return await cmdAnnotate(rest);
      default:
        process.stderr.write(
          "usage: extract <tokens|sequences|annotate> [options]\n",
        );
        return 1;
    }
  } catch (err) {
    if (err instanceof UsageError || (err as Error)?.name === "TypeError") {
      process.stderr.write(`usage error: ${(err as Error).message}\n`);
      return 1;
    }
    if (err instanceof ModelUnavailableError) {
      process.stderr.write(`model unavailable: ${err.message}\n`);
      return 3;
    }
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 2;
  }
}

const isDirectRun = process.argv[1]?.endsWith("cli.js");
if (isDirectRun) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
