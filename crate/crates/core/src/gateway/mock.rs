use std::path::{Path, PathBuf};

use super::{CompletionRequest, Provider, ProviderError};

/// Replays canned replies from `<dir>/<prompt sha256>/<sample index>.txt`.
#[derive(Debug, Clone)]
pub struct MockProvider {
    dir: PathBuf,
}

impl MockProvider {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn response_path(&self, prompt_id: &str, sample_index: usize) -> PathBuf {
        self.dir.join(prompt_id).join(format!("{sample_index}.txt"))
    }
}

impl Provider for MockProvider {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let path = self.response_path(request.prompt_id, request.sample_index);
        std::fs::read_to_string(&path)
            .map_err(|e| ProviderError::MockMissing(format!("{}/{}.txt: {e}", request.prompt_id, request.sample_index)))
    }
}
