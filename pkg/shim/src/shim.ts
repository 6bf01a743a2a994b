#!/usr/bin/env node
/**
 * Guest-language runner shim.
 *
 * Usage: shim <source_path> <timeout_s> <output_cap> <memory_cap>
 *
 * Runs one candidate source file with the guest interpreter (python3 by
 * default, STEERBENCH_SHIM_PYTHON overrides) in its own process group and
 * reports exactly one JSON object on stdout:
 *
 *   {"stdout": str, "stderr": str, "exit_code": int,
 *    "duration_ms": int, "timed_out": bool}
 *
 * The candidate's own stdout is captured into the report, never passed
 * through raw. Wall-clock timeout is primary (sleeping candidates must
 * fail too); an address-space cap and a CPU-seconds cap are applied via
 * ulimit where the platform provides it. The shim itself always finishes
 * within timeout + 3 s: SIGTERM at the deadline, SIGKILL one second later.
 */

import { spawn } from 'child_process';
import * as fs from 'fs';

export interface ShimReport {
  stdout: string;
  stderr: string;
  exit_code: number;
  duration_ms: number;
  timed_out: boolean;
}

const KILL_GRACE_MS = 1000;

const SIGNAL_NUMBERS: Record<string, number> = {
  SIGHUP: 1,
  SIGINT: 2,
  SIGQUIT: 3,
  SIGKILL: 9,
  SIGSEGV: 11,
  SIGTERM: 15,
  SIGXCPU: 24,
};

/** Collect stream data up to a byte cap; the rest is dropped. */
class CappedCollector {
  private chunks: Buffer[] = [];
  private size = 0;

  constructor(private readonly cap: number) {}

  push(chunk: Buffer): void {
    if (this.size >= this.cap) return;
    const room = this.cap - this.size;
    const piece = chunk.length > room ? chunk.subarray(0, room) : chunk;
    this.chunks.push(piece);
    this.size += piece.length;
  }

  text(): string {
    // toString('utf8') replaces invalid sequences, so the report never
    // carries raw non-UTF-8 bytes.
    return Buffer.concat(this.chunks).toString('utf8');
  }
}

function killTree(pid: number, signal: NodeJS.Signals): void {
  try {
    process.kill(-pid, signal); // negative pid: whole process group
  } catch {
    try {
      process.kill(pid, signal);
    } catch {
      /* already gone */
    }
  }
}

export function runCandidate(
  sourcePath: string,
  timeoutS: number,
  outputCap: number,
  memoryCap: number,
): Promise<ShimReport> {
  const interpreter = process.env.STEERBENCH_SHIM_PYTHON || 'python3';
  const memoryKb = Math.max(1, Math.floor(memoryCap / 1024));
  const cpuSeconds = Math.max(1, Math.ceil(timeoutS) + 1);
  // ulimit provides the address-space and CPU caps; `exec` keeps the
  // interpreter as the direct child of the shell we signal.
  const script = `ulimit -v ${memoryKb} 2>/dev/null; ulimit -t ${cpuSeconds} 2>/dev/null; exec "$0" "$1"`;

  return new Promise((resolve) => {
    const started = Date.now();
    const child = spawn('bash', ['-c', script, interpreter, sourcePath], {
      stdio: ['ignore', 'pipe', 'pipe'],
      detached: true, // own process group, so the whole tree can be killed
    });

    const stdout = new CappedCollector(outputCap);
    const stderr = new CappedCollector(outputCap);
    child.stdout.on('data', (chunk: Buffer) => stdout.push(chunk));
    child.stderr.on('data', (chunk: Buffer) => stderr.push(chunk));

    let timedOut = false;
    let settled = false;
    let hardKill: ReturnType<typeof setTimeout> | undefined;

    const deadline = setTimeout(() => {
      timedOut = true;
      killTree(child.pid!, 'SIGTERM');
      hardKill = setTimeout(() => killTree(child.pid!, 'SIGKILL'), KILL_GRACE_MS);
    }, Math.max(1, Math.round(timeoutS * 1000)));

    const finish = (exitCode: number) => {
      if (settled) return;
      settled = true;
      clearTimeout(deadline);
      if (hardKill) clearTimeout(hardKill);
      resolve({
        stdout: stdout.text(),
        stderr: stderr.text(),
        exit_code: exitCode,
        duration_ms: Date.now() - started,
        timed_out: timedOut,
      });
    };

    child.on('error', (err) => {
      stderr.push(Buffer.from(String(err)));
      finish(127);
    });
    child.on('close', (code, signal) => {
      const exitCode =
        code !== null ? code : signal ? -(SIGNAL_NUMBERS[signal] ?? 1) : -1;
      finish(exitCode);
    });
  });
}

export async function main(argv: string[]): Promise<number> {
  if (argv.length < 4) {
    process.stdout.write(
      JSON.stringify({
        error: 'usage: shim <source_path> <timeout_s> <output_cap> <memory_cap>',
      }) + '\n',
    );
    return 2;
  }
  const [sourcePath, timeoutRaw, capRaw, memRaw] = argv;
  const timeoutS = Number(timeoutRaw);
  const outputCap = Number(capRaw);
  const memoryCap = Number(memRaw);
  if (!Number.isFinite(timeoutS) || !Number.isFinite(outputCap) || !Number.isFinite(memoryCap)) {
    process.stdout.write(JSON.stringify({ error: 'non-numeric limit argument' }) + '\n');
    return 2;
  }
  if (!fs.existsSync(sourcePath)) {
    process.stdout.write(
      JSON.stringify({ error: `source file not found: ${sourcePath}` }) + '\n',
    );
    return 2;
  }
  const report = await runCandidate(sourcePath, timeoutS, outputCap, memoryCap);
  process.stdout.write(JSON.stringify(report) + '\n');
  return 0;
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
