// Heartbeat staleness, mirroring the agent's own arithmetic: silence longer
// than interval * threshold means the device is out of contact. The boundary
// is inclusive on the connected side (exactly the window is still fine).

export type HeartbeatStatus = "connected" | "lost" | "never";

export function heartbeatStatus(
  lastHeartbeat: number | null,
  now: number,
  intervalS = 30,
  missedThreshold = 3,
): HeartbeatStatus {
  if (lastHeartbeat === null) return "never";
  return now - lastHeartbeat > intervalS * missedThreshold ? "lost" : "connected";
}

export function heartbeatAge(lastHeartbeat: number | null, now: number): string {
  if (lastHeartbeat === null) return "never";
  const age = Math.max(0, now - lastHeartbeat);
  if (age < 60) return `${age}s ago`;
  if (age < 3600) return `${Math.floor(age / 60)}m ago`;
  return `${Math.floor(age / 3600)}h ago`;
}
