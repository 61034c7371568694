//! The MIP-derived chat prompt.
//!
//! The instruction and its two worked examples live in a text asset with
//! named sections so a different reconstruction can be swapped in:
//!
//! ```text
//! VERSION: <tag>
//! ### INSTRUCTION
//! ...
//! ### EXAMPLE_INPUT_1
//! ### EXAMPLE_OUTPUT_1
//! ### EXAMPLE_INPUT_2
//! ### EXAMPLE_OUTPUT_2
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SYSTEM_PROMPT: &str =
    "You are a helpful assistant. You have extensive linguistic knowledge.";

const DEFAULT_TEMPLATE: &str = include_str!("../assets/default_template.txt");

const SECTIONS: [&str; 5] = [
    "INSTRUCTION",
    "EXAMPLE_INPUT_1",
    "EXAMPLE_OUTPUT_1",
    "EXAMPLE_INPUT_2",
    "EXAMPLE_OUTPUT_2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

/// One worked example: the input sentence and the full annotated response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub instruction: String,
    pub examples: [FewShotExample; 2],
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptInstance {
    pub messages: Vec<ChatMessage>,
    pub sentence_id: String,
    pub template_digest: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("sentence is empty")]
    EmptySentence,
    #[error("template is missing section `{0}`")]
    MissingSection(&'static str),
    #[error("template has no VERSION line")]
    MissingVersion,
    #[error("template instruction must speak of \"words\", not \"lexical units\"")]
    InstructionWording,
    #[error("cannot read template {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// The shipped reconstruction of the modified MIP Step 3b prompt.
pub fn default_template() -> PromptTemplate {
    PromptTemplate::parse(DEFAULT_TEMPLATE).expect("bundled template is well formed")
}

impl PromptTemplate {
    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|source| PromptError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, PromptError> {
        let mut version = None;
        let mut bodies: [Option<Vec<&str>>; 5] = Default::default();
        let mut current: Option<usize> = None;

        for line in text.lines() {
            if let Some(name) = line.strip_prefix("### ") {
                current = SECTIONS.iter().position(|s| *s == name.trim());
                if let Some(i) = current {
                    bodies[i] = Some(Vec::new());
                }
                continue;
            }
            match current {
                Some(i) => bodies[i].get_or_insert_with(Vec::new).push(line),
                None => {
                    if let Some(v) = line.strip_prefix("VERSION:") {
                        version = Some(v.trim().to_string());
                    }
                }
            }
        }

        let mut take = |i: usize| -> Result<String, PromptError> {
            let body = bodies[i].take().ok_or(PromptError::MissingSection(SECTIONS[i]))?;
            let joined = body.join("\n").trim().to_string();
            if joined.is_empty() {
                return Err(PromptError::MissingSection(SECTIONS[i]));
            }
            Ok(joined)
        };
        let template = PromptTemplate {
            instruction: take(0)?,
            examples: [
                FewShotExample {
                    input: take(1)?,
                    output: take(2)?,
                },
                FewShotExample {
                    input: take(3)?,
                    output: take(4)?,
                },
            ],
            version: version.filter(|v| !v.is_empty()).ok_or(PromptError::MissingVersion)?,
        };
        let lower = template.instruction.to_lowercase();
        if !lower.contains("words") || lower.contains("lexical unit") {
            return Err(PromptError::InstructionWording);
        }
        Ok(template)
    }

    /// Writes the template back in asset form.
    pub fn to_asset(&self) -> String {
        let mut out = format!("VERSION: {}\n### INSTRUCTION\n{}\n", self.version, self.instruction);
        for (i, ex) in self.examples.iter().enumerate() {
            out.push_str(&format!(
                "### EXAMPLE_INPUT_{n}\n{}\n### EXAMPLE_OUTPUT_{n}\n{}\n",
                ex.input,
                ex.output,
                n = i + 1
            ));
        }
        out
    }

    /// Instruction followed by the two worked examples, without the target.
    fn render_body(&self) -> String {
        let mut out = self.instruction.clone();
        for (i, ex) in self.examples.iter().enumerate() {
            out.push_str(&format!(
                "\n\nExample {}:\n\"{}\"\n{}",
                i + 1,
                ex.input,
                ex.output
            ));
        }
        out
    }
}

/// Stable hex SHA-256 over version, instruction and examples.
pub fn template_digest(template: &PromptTemplate) -> String {
    let canonical = serde_json::to_vec(&(
        &template.version,
        &template.instruction,
        template
            .examples
            .iter()
            .map(|e| (&e.input, &e.output))
            .collect::<Vec<_>>(),
    ))
    .expect("strings always serialize");
    hex::encode(Sha256::digest(&canonical))
}

/// System message plus one user message whose last line is the sentence in
/// ASCII double quotes. Sentence-internal quotes are left as they are.
pub fn build_messages(
    template: &PromptTemplate,
    sentence_id: &str,
    sentence: &str,
) -> Result<PromptInstance, PromptError> {
    if sentence.trim().is_empty() {
        return Err(PromptError::EmptySentence);
    }
    let user = format!("{}\n\n\"{}\"", template.render_body(), sentence);
    Ok(PromptInstance {
        messages: vec![
            ChatMessage {
                role: Role::System,
                content: SYSTEM_PROMPT.to_string(),
            },
            ChatMessage {
                role: Role::User,
                content: user,
            },
        ],
        sentence_id: sentence_id.to_string(),
        template_digest: template_digest(template),
    })
}
