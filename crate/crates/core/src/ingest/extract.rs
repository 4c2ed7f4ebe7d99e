use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use super::IngestError;
use crate::model::DocumentKind;

/// Adapter turning PDF bytes into plain text.
pub trait PdfTextExtractor: Send + Sync {
    fn extract(&self, pdf: &[u8]) -> Result<String, String>;
}

/// PDF text extraction backed by the `pdf-extract` crate.
#[derive(Debug, Default, Clone, Copy)]
pub struct PdfExtractAdapter;

impl PdfTextExtractor for PdfExtractAdapter {
    fn extract(&self, pdf: &[u8]) -> Result<String, String> {
        // the parser panics on some malformed inputs
        match catch_unwind(AssertUnwindSafe(|| pdf_extract::extract_text_from_mem(pdf))) {
            Ok(Ok(text)) => Ok(text),
            Ok(Err(e)) => Err(e.to_string()),
            Err(_) => Err("PDF parser panicked on malformed input".into()),
        }
    }
}

/// UTF-8 with `\n` line endings and no NUL characters.
pub fn normalize_text(raw: &str) -> String {
    raw.replace("\r\n", "\n").replace('\r', "\n").replace('\0', "")
}

/// Per-kind text extraction. TEX, NOTE and TRANSCRIPT are decoded and
/// normalized; PDF goes through the registered adapter, if any.
#[derive(Clone, Default)]
pub struct Extractors {
    pdf: Option<Arc<dyn PdfTextExtractor>>,
}

impl std::fmt::Debug for Extractors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Extractors")
            .field("pdf", &self.pdf.is_some())
            .finish()
    }
}

impl Extractors {
    /// No PDF support.
    pub fn text_only() -> Self {
        Extractors { pdf: None }
    }

    pub fn with_pdf(pdf: Arc<dyn PdfTextExtractor>) -> Self {
        Extractors { pdf: Some(pdf) }
    }

    pub fn standard() -> Self {
        Self::with_pdf(Arc::new(PdfExtractAdapter))
    }

    pub fn supports(&self, kind: DocumentKind) -> bool {
        kind != DocumentKind::PdfText || self.pdf.is_some()
    }

    pub fn extract_text(&self, blob: &[u8], kind: DocumentKind) -> Result<String, IngestError> {
        match kind {
            DocumentKind::PdfText => {
                let pdf = self.pdf.as_ref().ok_or(IngestError::UnsupportedKind(kind))?;
                let text = pdf.extract(blob).map_err(IngestError::ExtractionFailed)?;
                Ok(normalize_text(&text))
            }
            DocumentKind::Tex | DocumentKind::Note | DocumentKind::Transcript => {
                let text = std::str::from_utf8(blob).map_err(|e| {
                    IngestError::ExtractionFailed(format!("{kind} content is not UTF-8: {e}"))
                })?;
                Ok(normalize_text(text))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn note_normalization() {
        let x = Extractors::text_only();
        assert_eq!(x.extract_text(b"a\r\nb", DocumentKind::Note).unwrap(), "a\nb");
        assert_eq!(x.extract_text(b"a\rb\0c", DocumentKind::Note).unwrap(), "a\nbc");
    }

    #[test]
    fn tex_passes_through() {
        let src = "\\section{Intro}\n$E = mc^2$ % comment\n";
        let x = Extractors::text_only();
        assert_eq!(x.extract_text(src.as_bytes(), DocumentKind::Tex).unwrap(), src);
    }

    #[test]
    fn errors() {
        let x = Extractors::text_only();
        assert!(matches!(
            x.extract_text(b"%PDF", DocumentKind::PdfText),
            Err(IngestError::UnsupportedKind(DocumentKind::PdfText))
        ));
        assert!(matches!(
            x.extract_text(&[0xff, 0xfe], DocumentKind::Note),
            Err(IngestError::ExtractionFailed(_))
        ));
        assert!(matches!(
            Extractors::standard().extract_text(b"not a pdf", DocumentKind::PdfText),
            Err(IngestError::ExtractionFailed(_))
        ));
    }
}
