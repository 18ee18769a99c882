/**
 * Command-line entry point:
 *
 *   node dist/main.js --host 127.0.0.1 --port 7601 --episodes 10 \
 *       --policy random [--seed N] [--scenario alley|urban] \
 *       [--table policy.txt] [--transcript FILE]
 */

import * as fs from "node:fs";
import { parseArgs } from "node:util";

import { ClientSession, ProtocolError } from "./client.js";
import { makePolicy } from "./policy.js";
import { runEpisodes } from "./runner.js";

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      host: { type: "string", default: "127.0.0.1" },
      port: { type: "string", default: "7601" },
      episodes: { type: "string", default: "10" },
      policy: { type: "string", default: "random" },
      seed: { type: "string", default: "0" },
      scenario: { type: "string", default: "alley" },
      table: { type: "string" },
      transcript: { type: "string" },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help) {
    console.log(
      "usage: main.js --host H --port P --episodes N " +
        "--policy random|greedy|stop [--seed N] [--scenario alley|urban] " +
        "[--table policy.txt] [--transcript FILE]",
    );
    return 0;
  }

  const port = Number(values.port);
  const episodes = Number(values.episodes);
  const seed = Number(values.seed);
  if (!Number.isInteger(port) || !Number.isInteger(episodes) || episodes < 1) {
    console.error("error: --port and --episodes must be positive integers");
    return 2;
  }

  const policy = makePolicy(values.policy!, seed, values.table);
  let session: ClientSession;
  try {
    session = await ClientSession.connect(values.host!, port);
  } catch (err) {
    console.error(
      `error: cannot establish session with ${values.host}:${port}: ` +
        (err instanceof Error ? err.message : String(err)),
    );
    return 1;
  }

  try {
    const results = await runEpisodes(session, episodes, policy, {
      seed,
      scenario: values.scenario!,
    });
    for (const r of results) {
      const status = r.failed ? `FAILED (${r.failure})` : r.reason;
      console.log(
        `episode ${r.episode} seed=${r.seed} steps=${r.steps} ` +
          `return=${r.clientReturn.toFixed(6)} ${status}`,
      );
    }
    const failed = results.filter((r) => r.failed).length;
    const mean =
      results.reduce((acc, r) => acc + r.clientReturn, 0) / results.length;
    console.log(
      `${results.length} episodes, ${failed} failed, ` +
        `mean return ${mean.toFixed(6)}`,
    );
    if (values.transcript) {
      fs.writeFileSync(values.transcript, session.transcriptText());
    }
    return failed > 0 ? 1 : 0;
  } catch (err) {
    if (err instanceof ProtocolError) {
      console.error(`protocol error [${err.code}]: ${err.message}`);
      return 1;
    }
    throw err;
  } finally {
    session.close();
  }
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(err);
    process.exit(1);
  },
);
