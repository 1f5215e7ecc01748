import { beforeEach, describe, expect, it, vi } from "vitest";

import { ApiError, DeviceView, ManagerClient } from "../src/api";
import { Dashboard } from "../src/dashboard";

function view(overrides: Partial<DeviceView> = {}): DeviceView {
  return {
    device_id: "d1",
    owner_user: "alice",
    policy_id: "default",
    level: 5,
    level_at: 0,
    mode: "ServerControlled",
    last_heartbeat: 100,
    queued_messages: 0,
    ...overrides,
  };
}

function fakeClient(devices: DeviceView[]) {
  return {
    listDevices: vi.fn(async () => devices),
    fireTrigger: vi.fn(async () => ({ delivered: true, queued: false })),
  } as unknown as ManagerClient;
}

async function settle() {
  await new Promise((resolve) => setTimeout(resolve, 0));
}

beforeEach(() => {
  document.body.innerHTML = "";
});

describe("Dashboard rendering", () => {
  it("shows one row per device with a readiness badge", async () => {
    const dashboard = new Dashboard(fakeClient([view(), view({ device_id: "d2", level: 3 })]), document, {
      now: () => 110,
    });
    await dashboard.refresh();
    const badges = dashboard.element.querySelectorAll('[data-testid="level-badge"]');
    expect([...badges].map((b) => b.textContent)).toEqual(["DEFCON 5", "DEFCON 3"]);
  });

  it("renders an empty state for an empty fleet", async () => {
    const dashboard = new Dashboard(fakeClient([]), document);
    await dashboard.refresh();
    expect(dashboard.element.querySelector(".empty")?.textContent).toMatch(/no devices/);
  });

  it("marks devices silent past the heartbeat window", async () => {
    // Silent for 120 s against a 90 s window.
    const dashboard = new Dashboard(fakeClient([view({ last_heartbeat: 1000 })]), document, {
      now: () => 1120,
    });
    await dashboard.refresh();
    expect(dashboard.element.querySelector('[data-testid="connectivity-lost"]')).not.toBeNull();
  });

  it("keeps fresh devices unflagged", async () => {
    const dashboard = new Dashboard(fakeClient([view({ last_heartbeat: 1000 })]), document, {
      now: () => 1090,
    });
    await dashboard.refresh();
    expect(dashboard.element.querySelector('[data-testid="connectivity-lost"]')).toBeNull();
  });

  it("shows queued triggers as pending chips", async () => {
    const dashboard = new Dashboard(fakeClient([view({ queued_messages: 2 })]), document, {
      now: () => 110,
    });
    await dashboard.refresh();
    expect(dashboard.element.querySelector('[data-testid="queued-chip"]')?.textContent).toBe("2 queued");
  });

  it("banners and keeps cached data when the manager is unreachable", async () => {
    const client = fakeClient([view()]);
    const dashboard = new Dashboard(client, document, { now: () => 110 });
    await dashboard.refresh();
    (client.listDevices as ReturnType<typeof vi.fn>).mockRejectedValueOnce(new Error("refused"));
    await dashboard.refresh();
    expect(dashboard.element.querySelector(".banner")?.classList.contains("error")).toBe(true);
    expect(dashboard.element.classList.contains("stale")).toBe(true);
    expect(dashboard.devices()).toHaveLength(1);
  });
});

describe("Dashboard triggers", () => {
  it("fires a plain remote call from the row button", async () => {
    const client = fakeClient([view()]);
    const dashboard = new Dashboard(client, document, { now: () => 110 });
    await dashboard.refresh();
    (dashboard.element.querySelector('[data-testid="trigger-call"]') as HTMLElement).click();
    await settle();
    expect(client.fireTrigger).toHaveBeenCalledWith("d1", "RemoteCall");
  });

  it("renders the server's rejection reason", async () => {
    const client = fakeClient([view()]);
    (client.fireTrigger as ReturnType<typeof vi.fn>).mockRejectedValueOnce(
      new ApiError(401, "not authorized for this device"),
    );
    const dashboard = new Dashboard(client, document, { now: () => 110 });
    await dashboard.refresh();
    (dashboard.element.querySelector('[data-testid="trigger-call"]') as HTMLElement).click();
    await settle();
    expect(dashboard.element.querySelector(".status")?.textContent).toMatch(/not authorized/);
  });

  it("sends nothing when the wipe dialog is cancelled", async () => {
    const client = fakeClient([view()]);
    const dashboard = new Dashboard(client, document, { now: () => 110 });
    await dashboard.refresh();

    (dashboard.element.querySelector('[data-testid="trigger-wipe"]') as HTMLElement).click();
    await settle();
    expect(document.querySelector(".confirm-overlay")).not.toBeNull();
    (document.querySelector('[data-testid="confirm-cancel"]') as HTMLElement).click();
    await settle();

    expect(client.fireTrigger).not.toHaveBeenCalled();
    expect(dashboard.element.querySelector(".status")?.textContent).toBe("wipe cancelled");
  });

  it("sends the level-1 jump only with the typed token", async () => {
    const client = fakeClient([view()]);
    const dashboard = new Dashboard(client, document, { now: () => 110 });
    await dashboard.refresh();

    (dashboard.element.querySelector('[data-testid="trigger-wipe"]') as HTMLElement).click();
    await settle();
    const input = document.querySelector('[data-testid="confirm-token"]') as HTMLInputElement;
    input.value = "CONFIRM-WIPE";
    input.dispatchEvent(new Event("input"));
    (document.querySelector('[data-testid="confirm-proceed"]') as HTMLElement).click();
    await settle();

    expect(client.fireTrigger).toHaveBeenCalledWith("d1", "RemoteCall", 1, "CONFIRM-WIPE");
  });
});
