// Boots the real Python manager with one in-process simulated device as the
// live fixture for the end-to-end console tests.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import type { TestProject } from "vitest/node";

let child: ChildProcess | null = null;
let workdir: string | null = null;

export default async function setup(project: TestProject): Promise<() => void> {
  workdir = mkdtempSync(join(tmpdir(), "tiercon-e2e-"));
  const repoRoot = resolve(__dirname, "..", "..");

  child = spawn(
    "python3",
    [
      "-m",
      "tiercon.cli",
      "serve",
      "--db",
      join(workdir, "db.json"),
      "--listen",
      "127.0.0.1:0",
      "--sim-device",
      join(repoRoot, "demos", "device-config.json"),
    ],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );

  const url = await new Promise<string>((resolvePromise, rejectPromise) => {
    const timeout = setTimeout(() => rejectPromise(new Error("manager did not start")), 20000);
    let buffer = "";
    child!.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/REST listening on ([\d.]+):(\d+)/);
      if (match) {
        clearTimeout(timeout);
        resolvePromise(`http://${match[1]}:${match[2]}`);
      }
    });
    child!.stderr!.on("data", (chunk: Buffer) => process.stderr.write(chunk));
    child!.on("exit", (code) => {
      clearTimeout(timeout);
      rejectPromise(new Error(`manager exited early with code ${code}`));
    });
  });

  project.provide("managerUrl", url);

  return async () => {
    if (child) {
      const exited = new Promise((resolvePromise) => child!.once("exit", resolvePromise));
      child.kill("SIGINT");
      await Promise.race([exited, new Promise((r) => setTimeout(r, 5000))]);
    }
    if (workdir) rmSync(workdir, { recursive: true, force: true });
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    managerUrl: string;
  }
}
