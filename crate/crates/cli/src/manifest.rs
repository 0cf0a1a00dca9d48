//! `manifest.sha256`: one `<sha256>  <relative path>` line per artifact, in the
//! format read by `sha256sum -c`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.sha256";

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut hasher = Sha256::new();
    let mut f = fs::File::open(path)?;
    io::copy(&mut f, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

/// Hashes every file under `root` (except the manifest itself) and writes the manifest.
pub fn write_manifest(root: &Path) -> io::Result<PathBuf> {
    let mut files = Vec::new();
    collect(root, &mut files)?;
    let mut rel: Vec<(String, PathBuf)> = files
        .into_iter()
        .filter_map(|p| {
            let r = p.strip_prefix(root).ok()?.to_string_lossy().replace('\\', "/");
            (r != MANIFEST).then_some((r, p))
        })
        .collect();
    rel.sort();
    let mut text = String::new();
    for (r, p) in rel {
        text.push_str(&format!("{}  {}\n", sha256_file(&p)?, r));
    }
    let path = root.join(MANIFEST);
    fs::write(&path, text)?;
    Ok(path)
}
