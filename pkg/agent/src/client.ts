/**
 * Line-delimited JSON client for the simulator's TCP episode protocol.
 *
 * Requests are strictly sequential: every request line yields exactly one
 * response line. Every line sent or received is recorded in the transcript
 * so a session can be replayed or audited afterwards.
 */

import * as net from "node:net";
import * as readline from "node:readline";

export const PROTOCOL_VERSION = "1";

export interface AckResponse {
  type: "ack";
  version: string;
  scenario?: string;
  seed?: number;
  agents?: string[];
}

export interface StateResponse {
  type: "state";
  agent_id: string;
  x: number;
  y: number;
  theta: number;
  sectors: number[];
  reward: number;
  episode_return: number;
  done: boolean;
  reason: string;
  step: number;
}

export interface MapResponse {
  type: "map";
  agent_id: string;
  width: number;
  height: number;
  resolution: number;
  origin_x: number;
  origin_y: number;
  payload: string;
}

export interface ErrorResponse {
  type: "error";
  code: string;
  message: string;
}

export type Response = AckResponse | StateResponse | MapResponse | ErrorResponse;

/** The server answered with an error response or broke protocol rules. */
export class ProtocolError extends Error {
  constructor(
    public readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ProtocolError";
  }
}

export interface TranscriptEntry {
  direction: "sent" | "received";
  line: string;
}

export class ClientSession {
  readonly transcript: TranscriptEntry[] = [];
  private readonly pending: Array<(line: string) => void> = [];
  private readonly buffered: string[] = [];
  private closed = false;

  private constructor(
    private readonly socket: net.Socket,
    rl: readline.Interface,
  ) {
    rl.on("line", (line) => {
      const waiter = this.pending.shift();
      if (waiter) {
        waiter(line);
      } else {
        this.buffered.push(line);
      }
    });
    socket.on("close", () => {
      this.closed = true;
      // Fail any request still waiting for a response.
      for (const waiter of this.pending.splice(0)) {
        waiter("");
      }
    });
  }

  /**
   * Connect and perform the hello handshake; rejects unless the server
   * reports protocol version "1".
   */
  static async connect(host: string, port: number): Promise<ClientSession> {
    const socket = await new Promise<net.Socket>((resolve, reject) => {
      const s = net.createConnection({ host, port }, () => {
        s.off("error", reject);
        resolve(s);
      });
      s.on("error", reject);
    });
    const rl = readline.createInterface({ input: socket });
    const session = new ClientSession(socket, rl);
    const ack = await session.request({ type: "hello" });
    if (ack.type !== "ack") {
      session.close();
      throw new ProtocolError("handshake", `expected ack, got ${ack.type}`);
    }
    if (ack.version !== PROTOCOL_VERSION) {
      session.close();
      throw new ProtocolError(
        "version_mismatch",
        `server speaks protocol version ${JSON.stringify(ack.version)}, ` +
          `this client requires "${PROTOCOL_VERSION}"`,
      );
    }
    return session;
  }

  /** Send one request object and await its single response line. */
  async request(obj: Record<string, unknown>): Promise<Response> {
    if (this.closed) {
      throw new ProtocolError("closed", "session is closed");
    }
    const line = JSON.stringify(obj);
    const reply = new Promise<string>((resolve) => {
      this.pending.push(resolve);
    });
    this.socket.write(line + "\n");
    this.transcript.push({ direction: "sent", line });
    const raw = await reply;
    if (raw === "" && this.closed) {
      throw new ProtocolError("closed", "server closed the connection");
    }
    this.transcript.push({ direction: "received", line: raw });
    return JSON.parse(raw) as Response;
  }

  /** Like request(), but raises on error responses. */
  async call(obj: Record<string, unknown>): Promise<Response> {
    const response = await this.request(obj);
    if (response.type === "error") {
      throw new ProtocolError(response.code, response.message);
    }
    return response;
  }

  transcriptText(): string {
    return (
      this.transcript
        .map((e) => (e.direction === "sent" ? "C: " : "S: ") + e.line)
        .join("\n") + "\n"
    );
  }

  close(): void {
    this.closed = true;
    this.socket.destroy();
  }
}

/** Decode the run-length map payload ({count}{U|F|O}) into a byte array. */
export function decodeMapPayload(payload: string, cells: number): Uint8Array {
  const values: Record<string, number> = { U: 0, F: 1, O: 2 };
  const out = new Uint8Array(cells);
  let index = 0;
  for (const match of payload.matchAll(/(\d+)([UFO])/g)) {
    const count = Number(match[1]);
    const value = values[match[2] as string]!;
    out.fill(value, index, index + count);
    index += count;
  }
  if (index !== cells) {
    throw new ProtocolError(
      "malformed_map",
      `payload covers ${index} cells, expected ${cells}`,
    );
  }
  return out;
}
