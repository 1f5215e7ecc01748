import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, ManagerClient } from "../src/api";

function mockFetch(status: number, body: unknown) {
  const fn = vi.fn(async () => ({
    ok: status >= 200 && status < 300,
    status,
    text: async () => JSON.stringify(body),
  }));
  vi.stubGlobal("fetch", fn);
  return fn;
}

afterEach(() => vi.unstubAllGlobals());

describe("ManagerClient", () => {
  it("forms trigger requests with auth header", async () => {
    const fetchMock = mockFetch(200, { delivered: true, queued: false });
    const client = new ManagerClient("http://m.example/", "tok");
    await client.fireTrigger("d1", "RemoteCall", 1, "CONFIRM");
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe("http://m.example/devices/d1/trigger");
    expect(init.method).toBe("POST");
    expect((init.headers as Record<string, string>)["X-Auth-Token"]).toBe("tok");
    expect(JSON.parse(init.body as string)).toEqual({
      kind: "RemoteCall",
      level: 1,
      confirm: "CONFIRM",
    });
  });

  it("omits optional trigger fields", async () => {
    const fetchMock = mockFetch(200, { delivered: true, queued: false });
    await new ManagerClient("http://m.example", "tok").fireTrigger("d1", "RemoteCall");
    const [, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(JSON.parse(init.body as string)).toEqual({ kind: "RemoteCall" });
  });

  it("maps server errors to ApiError with the reason", async () => {
    mockFetch(403, { error: "level-1 jump requires the confirmation token" });
    const client = new ManagerClient("http://m.example", "tok");
    await expect(client.fireTrigger("d1", "RemoteCall", 1)).rejects.toThrowError(ApiError);
    await expect(client.fireTrigger("d1", "RemoteCall", 1)).rejects.toThrow(/confirmation token/);
  });

  it("carries validation reports on 422", async () => {
    mockFetch(422, {
      error: "invalid",
      report: { valid: false, violations: [{ level: 1, subject: "DeleteAll", message: "forbidden" }] },
    });
    const client = new ManagerClient("http://m.example", "tok");
    const error = await client
      .putPolicy("default", { schema: 1, id: "default" } as never)
      .catch((e) => e as ApiError);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).report?.violations[0].subject).toBe("DeleteAll");
  });

  it("appends expected revision to policy updates", async () => {
    const fetchMock = mockFetch(200, { stored: true, revision: 3, report: { valid: true, violations: [] } });
    await new ManagerClient("http://m.example", "tok").putPolicy(
      "default",
      { schema: 1, id: "default" } as never,
      2,
    );
    const [url] = fetchMock.mock.calls[0] as unknown as [string];
    expect(url).toBe("http://m.example/policies/default?expected_revision=2");
  });
});
