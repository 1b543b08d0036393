/** Subprocess plumbing for the warpforge executable. */

import { execFile } from "node:child_process";

import { cliError } from "./errors";

/** Override with the WARPFORGE_BIN environment variable when the CLI is not
 * on PATH. */
export function warpforgeBinary(): string {
  return process.env.WARPFORGE_BIN ?? "warpforge";
}

export interface CliResult {
  stdout: string;
  stderr: string;
}

/** Run one warpforge subcommand, rejecting with a typed error on non-zero
 * exit. */
export function runWarpforge(args: string[]): Promise<CliResult> {
  return new Promise((resolve, reject) => {
    execFile(
      warpforgeBinary(),
      args,
      { maxBuffer: 16 * 1024 * 1024 },
      (error, stdout, stderr) => {
        if (error) {
          const code = typeof error.code === "number" ? error.code : 1;
          reject(cliError(code, stderr || error.message, args[0] ?? ""));
          return;
        }
        resolve({ stdout, stderr });
      },
    );
  });
}
