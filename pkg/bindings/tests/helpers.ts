import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const HERE = dirname(fileURLToPath(import.meta.url));

/** Shared fixture corpus committed alongside the engine's own tests. */
export const FIXTURES = join(HERE, "..", "..", "tests", "fixtures");

export function fixture(name: string): string {
  return join(FIXTURES, name);
}

export function readFixture(name: string): string {
  return readFileSync(fixture(name), "utf8");
}

export function readJsonl<T>(name: string): T[] {
  return readFixture(name)
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as T);
}

export function rawLines(name: string): string[] {
  return readFixture(name)
    .split("\n")
    .filter((line) => line.trim().length > 0);
}
