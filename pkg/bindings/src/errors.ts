/** Error types surfaced by the bindings. */

/** Input arrays have the wrong shape, dtype, or length. */
export class ShapeError extends TypeError {
  constructor(message: string) {
    super(message);
    this.name = "ShapeError";
  }
}

/** An on-disk artifact is malformed or inconsistent. */
export class FormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "FormatError";
  }
}

/** The warpforge CLI exited with a non-zero status. */
export class CliError extends Error {
  readonly exitCode: number;
  readonly stderr: string;

  constructor(message: string, exitCode: number, stderr: string) {
    super(message);
    this.name = "CliError";
    this.exitCode = exitCode;
    this.stderr = stderr;
  }
}

/** CLI exit code 2: input or artifact validation failed. */
export class CliValidationError extends CliError {
  constructor(message: string, stderr: string) {
    super(message, 2, stderr);
    this.name = "CliValidationError";
  }
}

/** CLI exit code 3: underlying I/O failure. */
export class CliIoError extends CliError {
  constructor(message: string, stderr: string) {
    super(message, 3, stderr);
    this.name = "CliIoError";
  }
}

/** CLI exit code 4: the binding built an invalid command line. */
export class CliUsageError extends CliError {
  constructor(message: string, stderr: string) {
    super(message, 4, stderr);
    this.name = "CliUsageError";
  }
}

export function cliError(exitCode: number, stderr: string, command: string): CliError {
  const message = `warpforge ${command} exited with code ${exitCode}: ${stderr.trim()}`;
  if (exitCode === 2) return new CliValidationError(message, stderr);
  if (exitCode === 3) return new CliIoError(message, stderr);
  if (exitCode === 4) return new CliUsageError(message, stderr);
  return new CliError(message, exitCode, stderr);
}
