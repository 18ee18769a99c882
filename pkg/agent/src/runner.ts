/**
 * Episode orchestration: drives reset/step loops over a client session and
 * cross-checks client-side reward accounting against the server's totals.
 */

import {
  ClientSession,
  ProtocolError,
  type StateResponse,
} from "./client.js";
import { ACTIONS, type Policy } from "./policy.js";

export interface EpisodeResult {
  episode: number;
  seed: number;
  steps: number;
  clientReturn: number;
  serverReturn: number;
  reason: string;
  failed: boolean;
  failure?: string;
}

export interface RunOptions {
  agentId?: string;
  scenario?: string;
  seed?: number;
  /** Allowed |clientReturn - serverReturn| before an episode counts as failed. */
  rewardTolerance?: number;
  maxSteps?: number;
}

function expectState(response: unknown): StateResponse {
  const r = response as { type?: string; code?: string; message?: string };
  if (r.type === "error") {
    throw new ProtocolError(r.code ?? "unknown", r.message ?? "server error");
  }
  if (r.type !== "state") {
    throw new ProtocolError("unexpected", `expected state, got ${r.type}`);
  }
  return response as StateResponse;
}

/**
 * Run `n` full episodes. Episodes whose protocol breaks mid-flight are
 * aborted and recorded as failed; the remaining episodes continue.
 */
export async function runEpisodes(
  session: ClientSession,
  n: number,
  policy: Policy,
  options: RunOptions = {},
): Promise<EpisodeResult[]> {
  const agentId = options.agentId ?? "adr";
  const scenario = options.scenario ?? "alley";
  const baseSeed = options.seed ?? 0;
  const tolerance = options.rewardTolerance ?? 1e-9;
  const maxSteps = options.maxSteps ?? 1000;

  const results: EpisodeResult[] = [];
  for (let episode = 0; episode < n; episode++) {
    const seed = baseSeed + episode;
    const result: EpisodeResult = {
      episode,
      seed,
      steps: 0,
      clientReturn: 0,
      serverReturn: 0,
      reason: "aborted",
      failed: false,
    };
    try {
      await session.call({ type: "reset", seed, scenario, agents: 1 });
      let state = expectState(
        await session.call({ type: "observe", agent_id: agentId }),
      );
      while (result.steps < maxSteps) {
        const actionIndex = policy.act(state);
        const [v, phi] = actionIndex >= 0 ? ACTIONS[actionIndex]! : [0, 0];
        state = expectState(
          await session.call({ type: "step", agent_id: agentId, v, phi }),
        );
        result.steps += 1;
        result.clientReturn += state.reward;
        result.serverReturn = state.episode_return;
        if (state.done) {
          result.reason = state.reason;
          break;
        }
      }
      if (result.reason === "aborted") {
        result.failed = true;
        result.failure = `no terminal state within ${maxSteps} steps`;
      } else if (
        Math.abs(result.clientReturn - result.serverReturn) > tolerance
      ) {
        result.failed = true;
        result.failure =
          `client return ${result.clientReturn} != ` +
          `server return ${result.serverReturn}`;
      }
    } catch (err) {
      result.failed = true;
      result.failure = err instanceof Error ? err.message : String(err);
    }
    results.push(result);
  }
  return results;
}
