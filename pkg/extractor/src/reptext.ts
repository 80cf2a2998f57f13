/**
 * Repetition pre-processing of instance texts before embedding: a
 * repetition candidate has its text appended to itself. In the train
 * phase the gold label decides; at inference the candidate test is
 * text-only (the normalized span occurs more than once in the article).
 *
 * Offsets are Unicode scalar-value positions, so slicing walks code
 * points, not UTF-16 units.
 */

export function slicePoints(text: string, begin: number, end: number): string {
  return Array.from(text).slice(begin, end).join("");
}

function normalize(text: string): string {
  const out: string[] = [];
  for (const ch of text) {
    if (/\s/u.test(ch)) {
      if (out.length && out[out.length - 1] === " ") continue;
      out.push(" ");
    } else {
      out.push(ch.toLowerCase());
    }
  }
  return out.join("");
}

function isAlnum(ch: string): boolean {
  return /[\p{L}\p{N}]/u.test(ch);
}

export function normalizeSpanText(spanText: string): string {
  let norm = normalize(spanText);
  let start = 0;
  let stop = norm.length;
  while (start < stop && !isAlnum(norm[start])) start += 1;
  while (stop > start && !isAlnum(norm[stop - 1])) stop -= 1;
  return norm.slice(start, stop);
}

export function repeatCount(articleText: string, spanText: string): number {
  const needle = normalizeSpanText(spanText);
  if (!needle) return 0;
  const hay = normalize(articleText);
  let count = 0;
  let from = 0;
  while (true) {
    const at = hay.indexOf(needle, from);
    if (at < 0) break;
    count += 1;
    from = at + needle.length;
  }
  return Math.max(count - 1, 0);
}

export type RepPhase = "train" | "infer" | "off";

export function repPreprocess(
  spanText: string,
  articleText: string,
  phase: RepPhase,
  goldIsRepetition: boolean,
): string {
  let duplicate = false;
  if (phase === "train") {
    duplicate = goldIsRepetition;
  } else if (phase === "infer") {
    duplicate = repeatCount(articleText, spanText) >= 1;
  }
  return duplicate ? `${spanText} ${spanText}` : spanText;
}
