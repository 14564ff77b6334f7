//! Append-only directory of committed snapshot epochs.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use v3db::format::{decode_commitment, decode_snapshot, encode_commitment, encode_snapshot};
use v3db::{commit_snapshot, Commitment, Snapshot};

use crate::error::Failure;

/// `epoch-NNNNNNNN.snp` and `epoch-NNNNNNNN.com` pairs; commitments are never rewritten.
pub struct VersionStore {
    dir: PathBuf,
}

impl VersionStore {
    pub fn open(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)?;
        Ok(VersionStore { dir: dir.to_path_buf() })
    }

    fn path(&self, epoch: u64, ext: &str) -> PathBuf {
        self.dir.join(format!("epoch-{epoch:08}.{ext}"))
    }

    /// Committed epochs in increasing order.
    pub fn epochs(&self) -> Result<Vec<u64>, Failure> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            let name = name.to_string_lossy();
            if let Some(id) = name.strip_prefix("epoch-").and_then(|s| s.strip_suffix(".com")) {
                if let Ok(epoch) = id.parse() {
                    out.push(epoch);
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// The named epoch, or the latest one.
    pub fn resolve(&self, epoch: Option<u64>) -> Result<u64, Failure> {
        let epochs = self.epochs()?;
        match epoch {
            Some(e) if epochs.contains(&e) => Ok(e),
            Some(e) => Err(Failure::data(format!("epoch {e} is not in the store"))),
            None => epochs.last().copied().ok_or_else(|| Failure::data("the store has no epochs")),
        }
    }

    /// Commits `s` as the next epoch, or as `epoch` if it is newer than every stored one.
    pub fn append(&self, s: &Snapshot, epoch: Option<u64>) -> Result<(u64, Commitment), Failure> {
        let lock = File::create(self.dir.join(".lock"))?;
        lock.lock()?;
        let next = self.epochs()?.last().map_or(0, |e| e + 1);
        let epoch = match epoch {
            Some(e) if e < next => {
                return Err(Failure::data(format!("epoch {e} exists or precedes epoch {}", next - 1)))
            }
            Some(e) => e,
            None => next,
        };
        let com = commit_snapshot(s)?;
        write_new(&self.path(epoch, "snp"), &encode_snapshot(s))?;
        write_new(&self.path(epoch, "com"), &encode_commitment(&com))?;
        lock.unlock()?;
        Ok((epoch, com))
    }

    pub fn snapshot(&self, epoch: u64) -> Result<Snapshot, Failure> {
        Ok(decode_snapshot(&fs::read(self.path(epoch, "snp"))?)?)
    }

    pub fn commitment(&self, epoch: u64) -> Result<Commitment, Failure> {
        Ok(decode_commitment(&fs::read(self.path(epoch, "com"))?)?)
    }
}

/// Writes through a temporary file and refuses to replace an existing target.
fn write_new(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    if path.exists() {
        return Err(Failure::data(format!("{} already exists", path.display())));
    }
    let tmp = path.with_extension("tmp");
    let mut f = OpenOptions::new().write(true).create(true).truncate(true).open(&tmp)?;
    f.write_all(bytes)?;
    f.sync_all()?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use v3db::fixtures::random_snapshot;
    use v3db::IvfPqConfig;

    use super::*;

    fn tiny() -> IvfPqConfig {
        IvfPqConfig {
            n0: 12,
            dim: 4,
            n_list: 4,
            n_probe: 2,
            capacity: 4,
            sub_quantizers: 2,
            codebook_size: 2,
            top_k: 2,
        }
    }

    #[test]
    fn epochs_increase_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let store = VersionStore::open(dir.path()).unwrap();
        assert!(store.resolve(None).is_err());
        let s = random_snapshot(1, tiny());
        let (e0, c0) = store.append(&s, None).unwrap();
        let (e1, c1) = store.append(&s, None).unwrap();
        assert_eq!((e0, e1), (0, 1));
        assert_eq!(c0, c1);
        assert_eq!(store.snapshot(1).unwrap(), s);
        assert_eq!(store.commitment(0).unwrap(), c0);
        assert_eq!(store.resolve(None).unwrap(), 1);
        assert!(store.append(&s, Some(1)).is_err());
        assert_eq!(store.append(&random_snapshot(2, tiny()), Some(7)).unwrap().0, 7);
        assert_eq!(store.epochs().unwrap(), vec![0, 1, 7]);
        assert!(store.resolve(Some(3)).is_err());
    }
}
