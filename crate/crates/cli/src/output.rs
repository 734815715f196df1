use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::CliError;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Creates `dir` if needed and checks that files can be created in it.
pub fn check_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let probe = dir.join(format!(".echomem-probe-{}", std::process::id()));
    File::create(&probe).map_err(io_err(dir))?;
    fs::remove_file(&probe).map_err(io_err(&probe))
}

/// Writes `dir/name` through a temporary file so a failed run never leaves a
/// partial file behind.
pub fn write_atomic<F>(dir: &Path, name: &str, fill: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, &target)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(&target))
}
