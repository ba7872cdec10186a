//! Compiling and running untrusted C programs.

use std::io::{ErrorKind, Read, Write};
use std::os::unix::process::{CommandExt, ExitStatusExt};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tempfile::TempDir;
use wait_timeout::ChildExt;

use super::{normalize_output, JudgeError, TestOutcome};
use crate::corpus::TestCase;
use crate::similarity::PassVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecLimits {
    /// Wall-clock limit per test.
    pub wall_secs: f64,
    /// Address-space cap.
    pub memory_bytes: u64,
    /// Bytes of stdout kept before the run counts as wrong output.
    pub output_bytes: u64,
    /// Treat a nonzero exit status as a runtime error even when output matches.
    pub strict_exit: bool,
}

impl Default for ExecLimits {
    fn default() -> Self {
        Self { wall_secs: 5.0, memory_bytes: 256 << 20, output_bytes: 1 << 20, strict_exit: false }
    }
}

impl ExecLimits {
    pub fn validate(&self) -> Result<(), JudgeError> {
        if !(self.wall_secs > 0.0 && self.wall_secs.is_finite()) || self.memory_bytes == 0 || self.output_bytes == 0 {
            return Err(JudgeError::InvalidLimits("all limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompilerConfig {
    pub command: String,
    /// Passed after `-std=c99`, before the source file.
    pub extra_flags: Vec<String>,
}

impl Default for CompilerConfig {
    fn default() -> Self {
        Self { command: "cc".into(), extra_flags: vec!["-O1".into()] }
    }
}

/// A compiled program; the temporary directory lives as long as this value.
#[derive(Debug)]
pub struct Binary {
    dir: TempDir,
    path: PathBuf,
}

impl Binary {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn dir(&self) -> &Path {
        self.dir.path()
    }
}

const SOURCE_NAME: &str = "candidate.c";
const BINARY_NAME: &str = "prog";

/// Compiles `source` as C99 with the math library linked. `workdir` is the
/// parent for the temporary build directory (system temp dir if `None`).
pub fn compile_c99(source: &str, workdir: Option<&Path>, cc: &CompilerConfig) -> Result<Binary, JudgeError> {
    let dir = match workdir {
        Some(parent) => tempfile::Builder::new().prefix("par-build-").tempdir_in(parent),
        None => tempfile::Builder::new().prefix("par-build-").tempdir(),
    }
    .map_err(|e| JudgeError::SandboxFailure(format!("cannot create build directory: {e}")))?;
    std::fs::write(dir.path().join(SOURCE_NAME), source)
        .map_err(|e| JudgeError::SandboxFailure(format!("cannot write source: {e}")))?;
    let output = Command::new(&cc.command)
        .current_dir(dir.path())
        .arg("-std=c99")
        .args(&cc.extra_flags)
        .args([SOURCE_NAME, "-o", BINARY_NAME, "-lm"])
        .env("LC_ALL", "C")
        .stdin(Stdio::null())
        .output()
        .map_err(|e| match e.kind() {
            ErrorKind::NotFound => JudgeError::ToolchainMissing(cc.command.clone()),
            _ => JudgeError::SandboxFailure(format!("cannot run {}: {e}", cc.command)),
        })?;
    if !output.status.success() {
        let mut diagnostics = String::from_utf8_lossy(&output.stderr).into_owned();
        diagnostics.push_str(&String::from_utf8_lossy(&output.stdout));
        return Err(JudgeError::CompileError { diagnostics });
    }
    let path = dir.path().join(BINARY_NAME);
    Ok(Binary { dir, path })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestRun {
    pub pass_vector: PassVector,
    pub outcomes: Vec<TestOutcome>,
}

/// Runs every test in index order.
pub fn run_tests(binary: &Binary, tests: &[TestCase], limits: &ExecLimits) -> Result<TestRun, JudgeError> {
    limits.validate()?;
    let mut outcomes = Vec::with_capacity(tests.len());
    for tc in tests {
        outcomes.push(run_one(binary, tc, limits)?);
    }
    let pass_vector = PassVector::new(outcomes.iter().map(|o| *o == TestOutcome::Correct).collect());
    Ok(TestRun { pass_vector, outcomes })
}

fn run_one(binary: &Binary, tc: &TestCase, limits: &ExecLimits) -> Result<TestOutcome, JudgeError> {
    let mut cmd = Command::new(binary.path());
    cmd.current_dir(binary.dir())
        .env_clear()
        .env("PATH", "/usr/bin:/bin")
        .env("LC_ALL", "C")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null());
    let memory = limits.memory_bytes;
    let cpu = limits.wall_secs.ceil() as u64 + 1;
    let fsize = limits.output_bytes;
    // SAFETY: only async-signal-safe syscalls run between fork and exec.
    unsafe {
        cmd.pre_exec(move || {
            libc::setpgid(0, 0);
            set_limit(libc::RLIMIT_AS, memory);
            set_limit(libc::RLIMIT_CORE, 0);
            set_limit(libc::RLIMIT_CPU, cpu);
            set_limit(libc::RLIMIT_FSIZE, fsize);
            // Private, empty network namespace where the kernel allows it.
            libc::unshare(libc::CLONE_NEWUSER | libc::CLONE_NEWNET);
            Ok(())
        });
    }
    let mut child = cmd.spawn().map_err(|e| JudgeError::SandboxFailure(format!("cannot start program: {e}")))?;
    let pid = child.id() as libc::pid_t;

    let mut stdin = child.stdin.take().expect("stdin piped");
    let input = tc.stdin.clone();
    let writer = std::thread::spawn(move || {
        // Ignores a program that exits without reading its input.
        let _ = stdin.write_all(&input);
    });

    let mut stdout = child.stdout.take().expect("stdout piped");
    let cap = limits.output_bytes as usize;
    let overflow = Arc::new(AtomicBool::new(false));
    let overflow_flag = Arc::clone(&overflow);
    let reader = std::thread::spawn(move || {
        let mut out = Vec::new();
        let mut buf = [0u8; 8192];
        loop {
            match stdout.read(&mut buf) {
                Ok(0) => break,
                Ok(n) => {
                    if out.len() + n > cap {
                        overflow_flag.store(true, Ordering::SeqCst);
                        kill_group(pid);
                        break;
                    }
                    out.extend_from_slice(&buf[..n]);
                }
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(_) => break,
            }
        }
        out
    });

    let wall = Duration::from_secs_f64(limits.wall_secs);
    let status = child.wait_timeout(wall).map_err(|e| JudgeError::SandboxFailure(e.to_string()))?;
    let timed_out = status.is_none();
    let status = match status {
        Some(s) => s,
        None => {
            kill_group(pid);
            child.wait().map_err(|e| JudgeError::SandboxFailure(e.to_string()))?
        }
    };
    kill_group(pid);
    let _ = writer.join();
    let output = reader.join().map_err(|_| JudgeError::SandboxFailure("output reader panicked".into()))?;

    if timed_out || status.signal() == Some(libc::SIGXCPU) {
        return Ok(TestOutcome::Timeout);
    }
    if overflow.load(Ordering::SeqCst) {
        return Ok(TestOutcome::WrongOutput);
    }
    if status.signal().is_some() || (limits.strict_exit && !status.success()) {
        return Ok(TestOutcome::RuntimeError);
    }
    if normalize_output(&output) == normalize_output(&tc.expected_stdout) {
        Ok(TestOutcome::Correct)
    } else {
        Ok(TestOutcome::WrongOutput)
    }
}

fn set_limit(resource: libc::__rlimit_resource_t, value: u64) {
    let lim = libc::rlimit { rlim_cur: value as libc::rlim_t, rlim_max: value as libc::rlim_t };
    // SAFETY: plain syscall on a stack value.
    unsafe {
        libc::setrlimit(resource, &lim);
    }
}

fn kill_group(pid: libc::pid_t) {
    // SAFETY: signals only the process group created for this run.
    unsafe {
        libc::kill(-pid, libc::SIGKILL);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tc(input: &str, expected: &str) -> TestCase {
        TestCase { index: 1, stdin: input.as_bytes().to_vec(), expected_stdout: expected.as_bytes().to_vec() }
    }

    fn quick() -> ExecLimits {
        ExecLimits { wall_secs: 1.0, ..ExecLimits::default() }
    }

    #[test]
    fn compiles_and_links_math() {
        compile_c99("int main(){return 0;}", None, &CompilerConfig::default()).unwrap();
        let src = "#include <math.h>\n#include <stdio.h>\nint main(){double x; if (scanf(\"%lf\", &x) != 1) return 1; printf(\"%.1f\\n\", sqrt(x)); return 0;}";
        let b = compile_c99(src, None, &CompilerConfig::default()).unwrap();
        let run = run_tests(&b, &[tc("16", "4.0\n")], &quick()).unwrap();
        assert_eq!(run.outcomes, vec![TestOutcome::Correct]);
    }

    #[test]
    fn undeclared_is_compile_error() {
        let err = compile_c99("int main(){return x;}", None, &CompilerConfig::default()).unwrap_err();
        match err {
            JudgeError::CompileError { diagnostics } => assert!(diagnostics.contains("candidate.c")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_compiler() {
        let cc = CompilerConfig { command: "/nonexistent/cc".into(), extra_flags: vec![] };
        assert!(matches!(compile_c99("int main(){}", None, &cc), Err(JudgeError::ToolchainMissing(_))));
    }

    #[test]
    fn echo_passes_with_whitespace_normalization() {
        let src = "#include <stdio.h>\nint main(){int c; while((c=getchar())!=EOF) putchar(c); printf(\"  \\n\\n\"); return 3;}";
        let b = compile_c99(src, None, &CompilerConfig::default()).unwrap();
        let tests = vec![tc("a b\n", "a b"), TestCase { index: 2, ..tc("x\r\n", "x\n") }];
        let run = run_tests(&b, &tests, &quick()).unwrap();
        assert!(run.pass_vector.is_complete());
        let strict = ExecLimits { strict_exit: true, ..quick() };
        assert_eq!(run_tests(&b, &tests[..1], &strict).unwrap().outcomes, vec![TestOutcome::RuntimeError]);
    }

    #[test]
    fn infinite_loop_times_out() {
        let b = compile_c99("int main(){for(;;){}}", None, &CompilerConfig::default()).unwrap();
        let limits = ExecLimits { wall_secs: 0.3, ..ExecLimits::default() };
        let run = run_tests(&b, &[tc("", ""), tc("", "")], &limits).unwrap();
        assert_eq!(run.outcomes, vec![TestOutcome::Timeout, TestOutcome::Timeout]);
        assert_eq!(run.pass_vector.passed_count(), 0);
    }

    #[test]
    fn crash_and_flood() {
        let b = compile_c99("int main(){int *p = 0; return *p;}", None, &CompilerConfig::default()).unwrap();
        assert_eq!(run_tests(&b, &[tc("", "")], &quick()).unwrap().outcomes, vec![TestOutcome::RuntimeError]);
        let b = compile_c99(
            "#include <stdio.h>\nint main(){for(;;) puts(\"yyyyyyyy\");}",
            None,
            &CompilerConfig::default(),
        )
        .unwrap();
        let limits = ExecLimits { output_bytes: 4096, ..quick() };
        assert_eq!(run_tests(&b, &[tc("", "")], &limits).unwrap().outcomes, vec![TestOutcome::WrongOutput]);
    }

    #[test]
    fn ignores_unread_input() {
        let b = compile_c99("#include <stdio.h>\nint main(){puts(\"ok\");return 0;}", None, &CompilerConfig::default())
            .unwrap();
        let big = "1 ".repeat(200_000);
        assert_eq!(run_tests(&b, &[tc(&big, "ok")], &quick()).unwrap().outcomes, vec![TestOutcome::Correct]);
    }
}
