/**
 * In-memory bindings to the camfault engine.
 *
 * The engine is consumed strictly through its public surfaces: the
 * `camfault` CLI and its file formats (PNG images, tab-separated catalog
 * and registry listings). This package adds the array plumbing so host
 * code can inject failures into in-memory pixel buffers without managing
 * files itself.
 */

import { execFile } from "node:child_process";
import { createHash } from "node:crypto";
import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import * as path from "node:path";
import { promisify } from "node:util";

import { decodePng, encodePng, RawImage } from "./png.js";

const execFileAsync = promisify(execFile);

export type ArrayImage = RawImage;

export interface PresetInfo {
  name: string;
  family: string;
  /** raw `key=value` parameter text, exactly as the catalog export prints it */
  params: string;
}

export interface TaxonomyRecord {
  name: string;
  components: string[];
  status: string;
  /** transform family, grouping target, or exclusion reason */
  detail: string;
}

export interface ApplyOptions {
  globalSeed?: number;
  imageId?: string;
}

/** CLI command; override with CAMFAULT_CLI (e.g. "python3 -m camfault"). */
function cliCommand(): string[] {
  const override = process.env.CAMFAULT_CLI;
  if (override && override.trim()) return override.trim().split(/\s+/);
  return ["camfault"];
}

export async function runCli(args: string[]): Promise<string> {
  const [command, ...prefix] = cliCommand();
  const { stdout } = await execFileAsync(command, [...prefix, ...args], {
    maxBuffer: 64 * 1024 * 1024,
  });
  return stdout;
}

function checkImage(image: ArrayImage): void {
  if (!Number.isInteger(image.width) || !Number.isInteger(image.height)) {
    throw new Error("ArrayImage dimensions must be integers");
  }
  if (image.width < 1 || image.height < 1) {
    throw new Error("ArrayImage dimensions must be positive");
  }
  if (!(image.data instanceof Uint8Array)) {
    throw new Error("ArrayImage data must be a Uint8Array");
  }
  if (image.data.length !== image.width * image.height * 3) {
    throw new Error(
      `ArrayImage data length ${image.data.length} != ` +
        `${image.width}x${image.height}x3 (three 8-bit channels expected)`,
    );
  }
}

/**
 * Apply one failure preset to an in-memory RGB image.
 *
 * Output matches the CLI byte-for-byte for the same (preset, image, seed,
 * image id); the input array is never mutated.
 */
export async function applyPreset(
  presetName: string,
  image: ArrayImage,
  options: ApplyOptions = {},
): Promise<ArrayImage> {
  checkImage(image);
  const seed = options.globalSeed ?? 0;
  const imageId = options.imageId ?? "";
  const workDir = await mkdtemp(path.join(tmpdir(), "camfault-bind-"));
  try {
    const inputPath = path.join(workDir, "input.png");
    const outputPath = path.join(workDir, "output.png");
    await writeFile(inputPath, encodePng(image));
    await runCli([
      "apply",
      "--preset", presetName,
      "--input", inputPath,
      "--output", outputPath,
      "--seed", String(seed),
      "--image-id", imageId,
    ]);
    return decodePng(await readFile(outputPath));
  } finally {
    await rm(workDir, { recursive: true, force: true });
  }
}

/** The engine's full preset catalog (130 entries). */
export async function listPresets(): Promise<PresetInfo[]> {
  return parsePresetListing(await listPresetsRaw());
}

/** Raw catalog listing, byte-for-byte as `camfault presets list` prints it. */
export async function listPresetsRaw(): Promise<string> {
  return runCli(["presets", "list"]);
}

export function parsePresetListing(text: string): PresetInfo[] {
  const entries: PresetInfo[] = [];
  for (const line of text.split("\n")) {
    if (!line) continue;
    const [name, family, params = ""] = line.split("\t");
    if (!name || !family) throw new Error(`unparseable preset line: ${line}`);
    entries.push({ name, family, params });
  }
  return entries;
}

export function serializePresetListing(entries: PresetInfo[]): string {
  return entries.map((e) => `${e.name}\t${e.family}\t${e.params}`).join("\n") + "\n";
}

/** The 26-record failure-mode registry. */
export async function taxonomyRecords(): Promise<TaxonomyRecord[]> {
  return parseTaxonomyListing(await taxonomyRaw());
}

/** Raw registry TSV, byte-for-byte as `camfault taxonomy show --format tsv`. */
export async function taxonomyRaw(): Promise<string> {
  return runCli(["taxonomy", "show", "--format", "tsv"]);
}

export function parseTaxonomyListing(text: string): TaxonomyRecord[] {
  const records: TaxonomyRecord[] = [];
  for (const line of text.split("\n")) {
    if (!line) continue;
    const parts = line.split("\t");
    if (parts.length !== 4) throw new Error(`unparseable registry line: ${line}`);
    records.push({
      name: parts[0],
      components: parts[1].split(","),
      status: parts[2],
      detail: parts[3],
    });
  }
  return records;
}

export function serializeTaxonomyListing(records: TaxonomyRecord[]): string {
  return (
    records
      .map((r) => `${r.name}\t${r.components.join(",")}\t${r.status}\t${r.detail}`)
      .join("\n") + "\n"
  );
}

/** SHA-256 over dims and raw samples; identical to the engine's buffer digest. */
export function imageDigest(image: ArrayImage): string {
  checkImage(image);
  const hash = createHash("sha256");
  hash.update(`${image.width}x${image.height}x3:`);
  hash.update(image.data);
  return hash.digest("hex");
}

export { decodePng, encodePng } from "./png.js";
export type { RawImage } from "./png.js";
