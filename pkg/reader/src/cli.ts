/** `validate <dir>`: schema-check a dataset, exit 0 when clean, 1 otherwise. */

import { validateDataset } from "./validate.js";

async function main(argv: string[]): Promise<number> {
  if (argv.length !== 2 || argv[0] !== "validate") {
    console.error("usage: cli.js validate <dataset-dir>");
    return 1;
  }
  const result = await validateDataset(argv[1]);
  for (const err of result.errors) {
    console.error(`invalid: ${err}`);
  }
  if (result.ok) {
    const counts = Object.entries(result.counts)
      .map(([k, v]) => `${k}=${v}`)
      .join(" ");
    console.log(`dataset valid (${counts})`);
    return 0;
  }
  return 1;
}

main(process.argv.slice(2)).then((code) => {
  process.exitCode = code;
});
