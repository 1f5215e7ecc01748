// Fleet dashboard: polls GET /devices and renders one row per device with a
// readiness badge, connectivity staleness, queued-trigger chips, and action
// buttons. A level-1 wipe is reachable only through the confirmation dialog.

import { ApiError, DeviceView, ManagerClient } from "./api";
import { confirmDestructive } from "./confirm";
import { heartbeatAge, heartbeatStatus } from "./connectivity";

export type DashboardOptions = {
  pollMs?: number;
  heartbeatIntervalS?: number;
  missedThreshold?: number;
  now?: () => number; // server-side seconds; defaults to wall time
};

const LEVEL_BLURB: Record<number, string> = {
  5: "normal readiness",
  4: "heightened",
  3: "restricted",
  2: "locked down",
  1: "maximum",
};

export class Dashboard {
  readonly element: HTMLElement;
  private timer: ReturnType<typeof setInterval> | null = null;
  private banner: HTMLElement;
  private tbody: HTMLElement;
  private status: HTMLElement;
  private lastDevices: DeviceView[] = [];

  constructor(
    private client: ManagerClient,
    private doc: Document,
    private options: DashboardOptions = {},
  ) {
    this.element = doc.createElement("section");
    this.element.className = "dashboard";

    this.banner = doc.createElement("div");
    this.banner.className = "banner hidden";
    this.element.appendChild(this.banner);

    const table = doc.createElement("table");
    table.innerHTML =
      "<thead><tr><th>device</th><th>level</th><th>mode</th><th>heartbeat</th>" +
      "<th>pending</th><th>actions</th></tr></thead>";
    this.tbody = doc.createElement("tbody");
    table.appendChild(this.tbody);
    this.element.appendChild(table);

    this.status = doc.createElement("p");
    this.status.className = "status";
    this.element.appendChild(this.status);
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), this.options.pollMs ?? 2000);
  }

  stop(): void {
    if (this.timer !== null) clearInterval(this.timer);
    this.timer = null;
  }

  async refresh(): Promise<void> {
    try {
      this.lastDevices = await this.client.listDevices();
      this.banner.className = "banner hidden";
      this.render(this.lastDevices);
    } catch (error) {
      this.banner.textContent = `manager unreachable: ${String(error)} (showing cached data)`;
      this.banner.className = "banner error";
      this.element.classList.add("stale");
    }
  }

  render(devices: DeviceView[]): void {
    this.element.classList.remove("stale");
    this.tbody.textContent = "";
    if (devices.length === 0) {
      const row = this.doc.createElement("tr");
      row.innerHTML = `<td colspan="6" class="empty">no devices registered</td>`;
      this.tbody.appendChild(row);
      return;
    }
    const now = this.options.now ? this.options.now() : Math.floor(Date.now() / 1000);
    for (const device of devices) {
      this.tbody.appendChild(this.renderRow(device, now));
    }
  }

  private renderRow(device: DeviceView, now: number): HTMLElement {
    const doc = this.doc;
    const row = doc.createElement("tr");
    row.setAttribute("data-device", device.device_id);

    const name = doc.createElement("td");
    name.textContent = device.device_id;
    row.appendChild(name);

    const level = doc.createElement("td");
    const badge = doc.createElement("span");
    badge.className = `badge level-${device.level}`;
    badge.setAttribute("data-testid", "level-badge");
    badge.textContent = `DEFCON ${device.level}`;
    badge.title = LEVEL_BLURB[device.level] ?? "";
    level.appendChild(badge);
    row.appendChild(level);

    const mode = doc.createElement("td");
    mode.textContent = device.mode;
    row.appendChild(mode);

    const heartbeat = doc.createElement("td");
    const status = heartbeatStatus(
      device.last_heartbeat,
      now,
      this.options.heartbeatIntervalS ?? 30,
      this.options.missedThreshold ?? 3,
    );
    heartbeat.textContent = heartbeatAge(device.last_heartbeat, now);
    if (status === "lost") {
      const lost = doc.createElement("span");
      lost.className = "chip lost";
      lost.setAttribute("data-testid", "connectivity-lost");
      lost.textContent = "connectivity lost";
      heartbeat.appendChild(lost);
    }
    row.appendChild(heartbeat);

    const pending = doc.createElement("td");
    if (device.queued_messages > 0) {
      const chip = doc.createElement("span");
      chip.className = "chip queued";
      chip.setAttribute("data-testid", "queued-chip");
      chip.textContent = `${device.queued_messages} queued`;
      pending.appendChild(chip);
    }
    row.appendChild(pending);

    const actions = doc.createElement("td");
    const call = doc.createElement("button");
    call.textContent = "Remote call";
    call.setAttribute("data-testid", "trigger-call");
    call.addEventListener("click", () => void this.fireTrigger(device.device_id, "RemoteCall"));
    actions.appendChild(call);

    const wipe = doc.createElement("button");
    wipe.textContent = "Wipe (level 1)";
    wipe.className = "danger";
    wipe.setAttribute("data-testid", "trigger-wipe");
    wipe.addEventListener("click", () => void this.fireLevelOne(device.device_id));
    actions.appendChild(wipe);

    const traceButton = doc.createElement("button");
    traceButton.textContent = "Trace";
    traceButton.setAttribute("data-testid", "show-trace");
    traceButton.addEventListener("click", () => void this.showTraceTail(device.device_id));
    actions.appendChild(traceButton);
    row.appendChild(actions);

    return row;
  }

  // Recent trace tail for one device, straight from GET /devices/{id}/trace.
  async showTraceTail(deviceId: string): Promise<void> {
    let panel = this.element.querySelector('[data-testid="trace-tail"]') as HTMLElement | null;
    if (panel === null) {
      panel = this.doc.createElement("pre");
      panel.setAttribute("data-testid", "trace-tail");
      panel.className = "trace-tail";
      this.element.appendChild(panel);
    }
    try {
      const records = await this.client.getTraceTail(deviceId);
      panel.textContent =
        `${deviceId}:\n` +
        (records.length === 0
          ? "(no trace yet)"
          : records.map((r) => JSON.stringify(r)).join("\n"));
    } catch (error) {
      panel.textContent = String(error);
    }
  }

  async fireTrigger(deviceId: string, kind: string): Promise<void> {
    try {
      const result = await this.client.fireTrigger(deviceId, kind);
      this.status.textContent = result.queued
        ? `${kind} to ${deviceId}: queued (device unreachable)`
        : `${kind} delivered to ${deviceId}`;
    } catch (error) {
      this.status.textContent =
        error instanceof ApiError ? `rejected: ${error.message}` : String(error);
    }
    await this.refresh();
  }

  // The level-1 jump: no request leaves the browser until the operator has
  // typed the confirmation token into the dialog.
  async fireLevelOne(deviceId: string): Promise<void> {
    const token = await confirmDestructive(this.doc, {
      title: `Wipe ${deviceId}?`,
      message:
        "This jumps the device to maximum readiness: delete everything, " +
        "overwrite, and re-delete. It cannot be undone.",
      tokenLabel: "confirmation token",
      confirmLabel: "Wipe device",
    });
    if (token === null) {
      this.status.textContent = "wipe cancelled";
      return;
    }
    try {
      const result = await this.client.fireTrigger(deviceId, "RemoteCall", 1, token);
      this.status.textContent = result.queued
        ? `wipe queued for ${deviceId}`
        : `wipe delivered to ${deviceId}`;
    } catch (error) {
      this.status.textContent =
        error instanceof ApiError ? `rejected: ${error.message}` : String(error);
    }
    await this.refresh();
  }

  devices(): DeviceView[] {
    return this.lastDevices;
  }
}
