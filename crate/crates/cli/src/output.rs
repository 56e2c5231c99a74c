//! All-or-nothing output directories: files are staged in a temporary
//! sibling directory and renamed into place only once complete.

use std::fs;
use std::io;
use std::path::Path;

pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

pub fn commit(dir: &Path, files: &[(String, Vec<u8>)]) -> io::Result<()> {
    let parent = match dir.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => Path::new(".").to_path_buf(),
    };
    fs::create_dir_all(&parent)?;
    if dir.exists() {
        let ours = dir.join(RESOLVED_CONFIG).is_file();
        let empty = dir.is_dir() && fs::read_dir(dir)?.next().is_none();
        if !ours && !empty {
            return Err(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("{} exists and is not a previous run directory; refusing to replace it", dir.display()),
            ));
        }
    }
    let staged = tempfile::Builder::new().prefix(".limset-staging-").tempdir_in(&parent)?;
    for (name, bytes) in files {
        fs::write(staged.path().join(name), bytes)?;
    }
    if dir.exists() {
        let old = tempfile::Builder::new().prefix(".limset-replaced-").tempdir_in(&parent)?;
        let old_path = old.path().join("run");
        fs::rename(dir, &old_path)?;
        if let Err(e) = fs::rename(staged.path(), dir) {
            fs::rename(&old_path, dir)?;
            return Err(e);
        }
        drop(old);
    } else {
        fs::rename(staged.path(), dir)?;
    }
    // The staging path no longer exists; dropping the guard is a no-op.
    drop(staged);
    Ok(())
}
