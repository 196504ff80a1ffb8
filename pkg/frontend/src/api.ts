// Typed client for the oversight service. Every function takes the fetch
// implementation as a parameter so tests can stub the network.

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface CheckResult {
  failure?: string;
  detail?: string;
}

export interface ProposalReport {
  kind: string;
  r1: "pass" | "skipped" | CheckResult;
  r2: "pass" | "skipped" | CheckResult;
  r3: "pass" | "skipped" | CheckResult;
  viable: boolean;
  sentence: string | null;
  repair_issue: { kind: string; description: string } | null;
}

export interface Proposal {
  id: number;
  sentence: string;
  task: string;
  focus_id: string;
  focus_noun: string;
  prompt: string | null;
  response: string | null;
  report: ProposalReport | null;
  state: "pending" | "decided";
  decision: Record<string, string> | null;
}

export interface WorldObject {
  id: string;
  noun: string;
  adjectives: string[];
  at: string;
}

export interface StateDoc {
  scenario: string;
  task: string;
  status: string;
  error: string | null;
  world: {
    agent_at: string;
    holding: string | null;
    rooms: string[];
    receptacles: { name: string; openable: boolean; open: boolean }[];
    objects: WorldObject[];
    digest: string;
  };
  ledger: { sent: number; received: number; calls: number };
}

export interface ReportDoc {
  status: string;
  report: {
    scenario: string;
    task: string;
    objects: unknown[];
    llm_calls: number;
    repairs: number;
    rules_compiled: number;
    category_tally: Record<string, number>;
    final_digest: string;
  } | null;
}

export type DecisionPayload =
  | { decision: "accept" }
  | { decision: "reject"; reason: "nonsensical" | "wrong-preference" }
  | { decision: "modify"; sentence: string };

export interface ApiError {
  status: number;
  errors: { field: string; message: string }[];
}

export interface PreferencesDoc {
  preferences: Record<string, Record<string, string>>;
  blocklist: { noun: string; location: string }[];
}

async function asJson<T>(response: Response): Promise<T> {
  return (await response.json()) as T;
}

export class ConsoleApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async state(): Promise<StateDoc> {
    return asJson(await this.fetchFn(`${this.base}/state`));
  }

  async pendingProposals(): Promise<Proposal[]> {
    return asJson(await this.fetchFn(`${this.base}/proposals?state=pending`));
  }

  async report(): Promise<ReportDoc> {
    return asJson(await this.fetchFn(`${this.base}/report`));
  }

  async preferences(): Promise<PreferencesDoc> {
    return asJson(await this.fetchFn(`${this.base}/preferences`));
  }

  async savePreferences(doc: PreferencesDoc): Promise<ApiError | null> {
    const response = await this.fetchFn(`${this.base}/preferences`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(doc),
    });
    if (response.ok) {
      return null;
    }
    const body = await asJson<{ errors: ApiError["errors"] }>(response);
    return { status: response.status, errors: body.errors ?? [] };
  }

  /** POST a decision; resolves to null on success or the field errors on
   * 400/404/409 so the UI can surface them inline. */
  async submitDecision(
    id: number,
    payload: DecisionPayload,
  ): Promise<ApiError | null> {
    const response = await this.fetchFn(`${this.base}/proposals/${id}/decision`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (response.ok) {
      return null;
    }
    const body = await asJson<{ errors?: ApiError["errors"] }>(response);
    return { status: response.status, errors: body.errors ?? [] };
  }
}
