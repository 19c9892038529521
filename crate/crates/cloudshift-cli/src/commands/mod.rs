pub mod evaluate;
pub mod export_ply;
pub mod gen_dataset;
pub mod gen_world;
pub mod train;
pub mod verify;

pub(crate) fn depth_name(i: usize) -> String {
    format!("frame_{i:06}.depth.dmap")
}

pub(crate) fn intensity_name(i: usize) -> String {
    format!("frame_{i:06}.intensity.dmap")
}

pub(crate) fn offset_dir(offset: f64) -> String {
    format!("offset_{offset:+.6}")
}

pub(crate) fn ply_name(id: u64) -> String {
    format!("frame_{id:06}.ply")
}

/// File-name-safe identifiers for controllers and tracks.
pub(crate) fn check_name(kind: &str, name: &str) -> Result<(), crate::error::CliError> {
    if name.is_empty()
        || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
    {
        return Err(crate::error::CliError::usage(format!(
            "{kind} name `{name}` must be non-empty and use only letters, digits, `_`, `-`"
        )));
    }
    Ok(())
}
