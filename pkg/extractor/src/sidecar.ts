/**
 * Sidecar embedding files: the wire format shared with the pipeline.
 *
 * A sidecar is plain text with a `#dim=<d>` header followed by one row per
 * key. Token rows are `article_id\tfragment_index\ttoken_index\tv1 ... vd`,
 * sequence rows are `instance_id\tv1 ... vd`; vectors are space-separated
 * decimals with six fractional digits. Files are written atomically
 * (temp file in the same directory, then rename).
 */

import { randomBytes } from "node:crypto";
import { renameSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";

export interface TokenRow {
  articleId: string;
  fragmentIndex: number;
  tokenIndex: number;
  vector: number[];
}

export interface SeqRow {
  instanceId: number;
  vector: number[];
}

export function formatVector(vector: number[]): string {
  return vector.map((v) => v.toFixed(6)).join(" ");
}

function writeAtomic(path: string, content: string): void {
  const tmp = join(dirname(path), `.${randomBytes(6).toString("hex")}.tmp`);
  writeFileSync(tmp, content, "utf-8");
  renameSync(tmp, path);
}

export function writeTokenSidecar(path: string, dim: number, rows: TokenRow[]): void {
  const lines = [`#dim=${dim}`];
  for (const row of rows) {
    if (row.vector.length !== dim) {
      throw new Error(
        `row ${row.articleId}/${row.fragmentIndex}/${row.tokenIndex}: ` +
          `vector has ${row.vector.length} values, expected ${dim}`,
      );
    }
    lines.push(
      `${row.articleId}\t${row.fragmentIndex}\t${row.tokenIndex}\t${formatVector(row.vector)}`,
    );
  }
  writeAtomic(path, lines.join("\n") + "\n");
}

export function writeSeqSidecar(path: string, dim: number, rows: SeqRow[]): void {
  const lines = [`#dim=${dim}`];
  for (const row of rows) {
    if (row.vector.length !== dim) {
      throw new Error(
        `instance ${row.instanceId}: vector has ${row.vector.length} values, expected ${dim}`,
      );
    }
    lines.push(`${row.instanceId}\t${formatVector(row.vector)}`);
  }
  writeAtomic(path, lines.join("\n") + "\n");
}

/** Strict reader used by the tests to validate what we emit. */
export function readSidecarDim(content: string): number {
  const header = content.split("\n", 1)[0];
  const match = /^#dim=(\d+)$/.exec(header);
  if (!match) {
    throw new Error(`missing #dim= header, got ${JSON.stringify(header)}`);
  }
  return Number(match[1]);
}
