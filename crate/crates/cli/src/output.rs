//! Writes artifacts into the output directory. Files are staged under a
//! temporary name and renamed once all of them are written.

use std::fs;
use std::io;
use std::path::Path;

use crate::scenarios::Artifacts;
use crate::Format;

pub fn write_all(dir: &Path, artifacts: &Artifacts, format: Format) -> io::Result<()> {
    let mut files: Vec<&(String, String)> = Vec::new();
    if format != Format::Csv {
        files.extend(&artifacts.json);
    }
    if format != Format::Json {
        files.extend(&artifacts.csv);
    }
    fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.partial"));
        if let Err(e) = fs::write(&tmp, contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e);
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dst) in staged {
        fs::rename(tmp, dst)?;
    }
    Ok(())
}
