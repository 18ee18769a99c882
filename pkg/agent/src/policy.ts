/**
 * Action policies for the episode loop.
 *
 * The action set and the tabular state discretization mirror the server-side
 * training baseline, so a Q table trained there can be replayed here.
 */

import * as fs from "node:fs";

import type { StateResponse } from "./client.js";

/** (v, phi) command pairs; index order matters for table lookups. */
export const ACTIONS: ReadonlyArray<readonly [number, number]> = [
  [0.5, -0.5],
  [0.5, -0.25],
  [0.5, 0.0],
  [0.5, 0.25],
  [0.5, 0.5],
  [0.2, 0.0],
];

const RANGE_BIN_EDGES = [0.5, 1.5];
const HEADING_BIN_EDGES = [-0.2, -0.05, 0.05, 0.2];

/** Tabular state id: ternary-coded sectors plus a heading bin. */
export function discretize(sectors: number[], headingError: number): number {
  let code = 0;
  for (const r of sectors) {
    let bin = 2;
    if (r < RANGE_BIN_EDGES[0]!) {
      bin = 0;
    } else if (r < RANGE_BIN_EDGES[1]!) {
      bin = 1;
    }
    code = code * 3 + bin;
  }
  let hbin = 0;
  for (const edge of HEADING_BIN_EDGES) {
    if (headingError >= edge) {
      hbin += 1;
    }
  }
  return code * (HEADING_BIN_EDGES.length + 1) + hbin;
}

/** Deterministic 32-bit PRNG (mulberry32); good enough for action sampling. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface Policy {
  readonly name: string;
  /** Pick an action index for the current observation. */
  act(state: StateResponse): number;
}

export class RandomPolicy implements Policy {
  readonly name = "random";
  private readonly next: () => number;

  constructor(seed: number) {
    this.next = mulberry32(seed);
  }

  act(_state: StateResponse): number {
    return Math.floor(this.next() * ACTIONS.length);
  }
}

export class StopPolicy implements Policy {
  readonly name = "stop";

  act(_state: StateResponse): number {
    return -1; // sentinel: issue (v=0, phi=0) instead of a table action
  }
}

export class GreedyTablePolicy implements Policy {
  readonly name = "greedy";
  private readonly table = new Map<number, number[]>();

  /** Load `state_id action_id q_value` triples written by the trainer. */
  constructor(tablePath: string) {
    for (const line of fs.readFileSync(tablePath, "utf-8").split("\n")) {
      if (!line.trim()) {
        continue;
      }
      const [stateS, actionS, valueS] = line.trim().split(/\s+/);
      const stateId = Number(stateS);
      let row = this.table.get(stateId);
      if (!row) {
        row = new Array<number>(ACTIONS.length).fill(0);
        this.table.set(stateId, row);
      }
      row[Number(actionS)] = Number(valueS);
    }
  }

  act(state: StateResponse): number {
    const row = this.table.get(discretize(state.sectors, state.theta));
    if (!row) {
      return 2; // unvisited state: drive straight
    }
    let best = 0;
    for (let i = 1; i < row.length; i++) {
      if (row[i]! > row[best]!) {
        best = i;
      }
    }
    return best;
  }
}

export function makePolicy(
  name: string,
  seed: number,
  tablePath?: string,
): Policy {
  switch (name) {
    case "random":
      return new RandomPolicy(seed);
    case "stop":
      return new StopPolicy();
    case "greedy":
      if (!tablePath) {
        throw new Error("greedy policy requires --table FILE");
      }
      return new GreedyTablePolicy(tablePath);
    default:
      throw new Error(`unknown policy ${JSON.stringify(name)}`);
  }
}
