// Typed client for the manager's REST API. Every console interaction goes
// through these calls; the console keeps no state that a page refresh and a
// fresh GET cannot rebuild.

export type DeviceView = {
  device_id: string;
  owner_user: string;
  policy_id: string;
  level: number;
  level_at: number;
  mode: string;
  last_heartbeat: number | null;
  queued_messages: number;
};

export type Violation = { level: number | null; subject: string; message: string };

export type ValidationReport = { valid: boolean; violations: Violation[] };

export type TriggerResult = {
  delivered: boolean;
  queued: boolean;
  device?: DeviceView;
};

export type PolicyDocument = {
  schema: number;
  id: string;
  ack_interval_seconds: number;
  ack_timeout_seconds: number;
  tiers: Array<{
    level: number;
    escalation_triggers: Array<Record<string, unknown>>;
    actions: Array<Record<string, unknown>>;
  }>;
};

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly report?: ValidationReport,
  ) {
    super(message);
  }
}

export class ManagerClient {
  constructor(
    public baseUrl: string,
    public token: string,
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const response = await fetch(this.baseUrl.replace(/\/$/, "") + path, {
      method,
      headers: {
        "Content-Type": "application/json",
        "X-Auth-Token": this.token,
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    let doc: any = null;
    try {
      doc = text ? JSON.parse(text) : null;
    } catch {
      doc = null;
    }
    if (!response.ok) {
      const message = doc?.error ?? `HTTP ${response.status}`;
      throw new ApiError(response.status, message, doc?.report);
    }
    return doc;
  }

  async listDevices(): Promise<DeviceView[]> {
    const doc = (await this.request("GET", "/devices")) as { devices: DeviceView[] };
    return doc.devices;
  }

  async getDevice(deviceId: string): Promise<DeviceView> {
    return (await this.request("GET", `/devices/${deviceId}`)) as DeviceView;
  }

  async getTraceTail(deviceId: string, limit = 8): Promise<Record<string, unknown>[]> {
    const response = await fetch(`${this.baseUrl.replace(/\/$/, "")}/devices/${deviceId}/trace`);
    if (!response.ok) throw new ApiError(response.status, `HTTP ${response.status}`);
    const lines = (await response.text()).split("\n").filter((l) => l.trim());
    return lines.slice(-limit).map((l) => JSON.parse(l));
  }

  async fireTrigger(
    deviceId: string,
    kind: string,
    level?: number,
    confirm?: string,
  ): Promise<TriggerResult> {
    const body: Record<string, unknown> = { kind };
    if (level !== undefined) body.level = level;
    if (confirm !== undefined) body.confirm = confirm;
    return (await this.request("POST", `/devices/${deviceId}/trigger`, body)) as TriggerResult;
  }

  async sendAck(deviceId: string, credential: string): Promise<TriggerResult> {
    return (await this.request("POST", `/devices/${deviceId}/ack`, {
      credential,
    })) as TriggerResult;
  }

  async deleteFiles(deviceId: string, names: string[]): Promise<TriggerResult> {
    return (await this.request("POST", `/devices/${deviceId}/files/delete`, {
      names,
    })) as TriggerResult;
  }

  async getPolicy(policyId: string): Promise<{ policy: PolicyDocument; revision: number }> {
    return (await this.request("GET", `/policies/${policyId}`)) as {
      policy: PolicyDocument;
      revision: number;
    };
  }

  async putPolicy(
    policyId: string,
    document: PolicyDocument,
    expectedRevision?: number,
  ): Promise<{ stored: boolean; revision?: number; report: ValidationReport }> {
    const query = expectedRevision === undefined ? "" : `?expected_revision=${expectedRevision}`;
    return (await this.request("PUT", `/policies/${policyId}${query}`, document)) as {
      stored: boolean;
      revision?: number;
      report: ValidationReport;
    };
  }
}
