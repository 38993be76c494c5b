#!/usr/bin/env node
/** CLI: report --csv <path> --out <dir> [--window N] [--scenario name] */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { render } from "./render.js";
import { summarize } from "./summary.js";

export function run(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      options: {
        csv: { type: "string" },
        out: { type: "string" },
        window: { type: "string", default: "10" },
        scenario: { type: "string", default: "results" },
      },
    }));
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 2;
  }
  if (values.csv === undefined || values.out === undefined) {
    console.error("usage: report --csv <path> --out <dir> [--window N] [--scenario name]");
    return 2;
  }
  const window = Number(values.window);

  try {
    const text = readFileSync(values.csv, "utf-8");
    const summaries = summarize(text, window);
    const files = render(summaries, values.scenario);
    mkdirSync(values.out, { recursive: true });
    for (const f of files) {
      const path = join(values.out, f.name);
      writeFileSync(path, f.content);
      console.log(path);
    }
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(run(process.argv.slice(2)));
}
