use std::io::{ErrorKind, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use crate::error::{Error, Result};

/// Which external layout program renders DOT to SVG.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LayoutTool {
    /// Look up `dot` on `PATH`.
    #[default]
    Auto,
    /// Use this executable. It is invoked as `<path> -Tsvg` with DOT on stdin.
    Path(PathBuf),
    /// Never render SVG.
    Disabled,
}

impl LayoutTool {
    pub fn resolve(&self) -> Option<PathBuf> {
        match self {
            LayoutTool::Auto => find_on_path("dot"),
            LayoutTool::Path(p) => Some(p.clone()),
            LayoutTool::Disabled => None,
        }
    }
}

fn find_on_path(program: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(program))
        .find(|candidate| is_executable(candidate))
}

fn is_executable(p: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    p.metadata()
        .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
        .unwrap_or(false)
}

/// Render DOT with the `dot` program found on `PATH`.
pub fn to_svg(dot: &str) -> Result<Option<Vec<u8>>> {
    to_svg_with(&LayoutTool::Auto, dot)
}

/// Render DOT with the given tool.
///
/// `Ok(None)` means no tool is available; the caller decides whether that is
/// worth a warning. A tool that runs and fails is an [`Error::Export`].
pub fn to_svg_with(tool: &LayoutTool, dot: &str) -> Result<Option<Vec<u8>>> {
    let Some(program) = tool.resolve() else {
        return Ok(None);
    };
    let mut child = match Command::new(&program)
        .arg("-Tsvg")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
    {
        Ok(c) => c,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(&program, e)),
    };
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        // A tool that exits early closes the pipe; its status tells the story.
        let _ = stdin.write_all(dot.as_bytes());
    }
    let output = child.wait_with_output().map_err(|e| Error::io(&program, e))?;
    if !output.status.success() {
        return Err(Error::Export(format!(
            "{} exited with {}: {}",
            program.display(),
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    Ok(Some(output.stdout))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disabled_renders_nothing() {
        assert_eq!(to_svg_with(&LayoutTool::Disabled, "digraph {}").unwrap(), None);
    }

    #[test]
    fn missing_program_is_not_an_error() {
        let tool = LayoutTool::Path("/nonexistent/dot-binary".into());
        assert_eq!(to_svg_with(&tool, "digraph {}").unwrap(), None);
    }
}
