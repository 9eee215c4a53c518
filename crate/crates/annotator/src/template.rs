use serde::{Deserialize, Serialize};

use crate::error::TemplateError;

/// Slot for the instance text in both stages.
pub const TEXT_SLOT: &str = "<text>";
/// Slot for the stage-1 answer phrase in stage 2.
pub const ANSWER_SLOT: &str = "<answer>";
/// Every stage-2 template must ask for this.
pub const PROBABILITY_REQUEST: &str = "Output the probability only (a number between 0 and 1).";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Politeness,
    Stance,
    Bias,
    Custom,
}

/// One lettered choice of the stage-1 question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub letter: char,
    /// Shown in the stage-1 option list.
    pub label: String,
    /// Substituted into stage 2.
    pub phrase: String,
    /// Numeric annotation written to the corpus.
    pub value: f64,
}

impl AnswerOption {
    fn new(letter: char, label: &str, phrase: &str, value: f64) -> Self {
        Self { letter, label: label.into(), phrase: phrase.into(), value }
    }
}

/// Stage-1 and stage-2 prompt texts for one annotation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub task: Task,
    /// Question text; the option list is rendered below it.
    pub stage1_question: String,
    /// Rendered after the options, holds [`TEXT_SLOT`].
    pub stage1_footer: String,
    /// Holds [`ANSWER_SLOT`] and [`TEXT_SLOT`].
    pub stage2_text: String,
    pub options: Vec<AnswerOption>,
}

const STANCE_CLAIM: &str = "\"Climate change/global warming is a serious concern\"";

impl PromptTemplate {
    pub fn builtin(task: Task) -> Option<Self> {
        let t = match task {
            Task::Politeness => Self {
                task,
                stage1_question: "Is the following text polite? Output either A or B. Output a letter only.".into(),
                stage1_footer: "Text: <text>\nAnswer:".into(),
                stage2_text: format!(
                    "How likely is it that the following text is <answer>?\n{PROBABILITY_REQUEST}\nText: <text>\nAnswer:"
                ),
                options: vec![
                    AnswerOption::new('A', "Polite", "polite", 1.0),
                    AnswerOption::new('B', "Impolite", "impolite", 0.0),
                ],
            },
            Task::Stance => Self {
                task,
                stage1_question: format!(
                    "A statement can agree, be neutral, or disagree with the statement: {STANCE_CLAIM}. Classify the \
                     following statement into one of the three categories. Output either A, B, or C. Output a letter only."
                ),
                stage1_footer: "Statement: <text>\nAnswer:".into(),
                stage2_text: format!(
                    "How likely is it that the following text <answer> with the statement: {STANCE_CLAIM}?\n\
                     {PROBABILITY_REQUEST}\nText: <text>\nProbability:"
                ),
                options: vec![
                    AnswerOption::new('A', "Agree", "agrees", 1.0),
                    AnswerOption::new('B', "Neutral", "neither agrees nor disagrees", 0.0),
                    AnswerOption::new('C', "Disagree", "disagrees", -1.0),
                ],
            },
            Task::Bias => Self {
                task,
                stage1_question: "What is the political bias of the following article? Output either A,B, or C. Output a letter only."
                    .into(),
                stage1_footer: "Article: <text>\nAnswer:".into(),
                stage2_text: format!(
                    "How likely is it that the following article has a <answer> political bias? {PROBABILITY_REQUEST}\n\
                     Text: <text>\nProbability:"
                ),
                options: vec![
                    AnswerOption::new('A', "Left", "left-leaning", -1.0),
                    AnswerOption::new('B', "Center", "centrist", 0.0),
                    AnswerOption::new('C', "Right", "right-leaning", 1.0),
                ],
            },
            Task::Custom => return None,
        };
        Some(t)
    }

    /// A user-supplied template, checked for its slots and option letters.
    pub fn custom(
        stage1_question: impl Into<String>,
        stage1_footer: impl Into<String>,
        stage2_text: impl Into<String>,
        options: Vec<AnswerOption>,
    ) -> Result<Self, TemplateError> {
        let t = Self {
            task: Task::Custom,
            stage1_question: stage1_question.into(),
            stage1_footer: stage1_footer.into(),
            stage2_text: stage2_text.into(),
            options,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TemplateError> {
        if !self.stage1_footer.contains(TEXT_SLOT) && !self.stage1_question.contains(TEXT_SLOT) {
            return Err(TemplateError::MissingSlot { stage: 1, slot: TEXT_SLOT });
        }
        for slot in [TEXT_SLOT, ANSWER_SLOT] {
            if !self.stage2_text.contains(slot) {
                return Err(TemplateError::MissingSlot { stage: 2, slot });
            }
        }
        if !self.stage2_text.contains(PROBABILITY_REQUEST) {
            return Err(TemplateError::NoProbabilityRequest);
        }
        if self.options.len() < 2 {
            return Err(TemplateError::Options("at least two options are needed".into()));
        }
        let mut letters: Vec<char> = self.options.iter().map(|o| o.letter).collect();
        if letters.iter().any(|c| !c.is_ascii_uppercase()) {
            return Err(TemplateError::Options("option letters must be uppercase ASCII".into()));
        }
        letters.sort_unstable();
        letters.dedup();
        if letters.len() != self.options.len() {
            return Err(TemplateError::Options("option letters must be distinct".into()));
        }
        Ok(())
    }

    pub fn stage1_prompt(&self, text: &str) -> String {
        let mut out = self.stage1_question.replace(TEXT_SLOT, text);
        for o in &self.options {
            out.push_str(&format!("\n{}) {}", o.letter, o.label));
        }
        out.push('\n');
        out.push_str(&self.stage1_footer.replace(TEXT_SLOT, text));
        out
    }

    pub fn stage2_prompt(&self, text: &str, answer: &AnswerOption) -> String {
        // answer first, so a text containing the answer slot is left alone
        self.stage2_text.replace(ANSWER_SLOT, &answer.phrase).replace(TEXT_SLOT, text)
    }

    pub fn option(&self, letter: char) -> Option<&AnswerOption> {
        self.options.iter().find(|o| o.letter == letter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn politeness_prompts_render_verbatim() {
        let t = PromptTemplate::builtin(Task::Politeness).unwrap();
        assert_eq!(
            t.stage1_prompt("Thanks a lot!"),
            "Is the following text polite? Output either A or B. Output a letter only.\n\
             A) Polite\nB) Impolite\nText: Thanks a lot!\nAnswer:"
        );
        assert_eq!(
            t.stage2_prompt("Thanks a lot!", &t.options[1]),
            "How likely is it that the following text is impolite?\n\
             Output the probability only (a number between 0 and 1).\nText: Thanks a lot!\nAnswer:"
        );
    }

    #[test]
    fn builtins_are_valid() {
        for task in [Task::Politeness, Task::Stance, Task::Bias] {
            PromptTemplate::builtin(task).unwrap().validate().unwrap();
        }
        assert!(PromptTemplate::builtin(Task::Custom).is_none());
    }

    #[test]
    fn stance_and_bias_wording() {
        let s = PromptTemplate::builtin(Task::Stance).unwrap();
        let p = s.stage2_prompt("x", &s.options[1]);
        assert!(p.starts_with(
            "How likely is it that the following text neither agrees nor disagrees with the statement: \
             \"Climate change/global warming is a serious concern\"?"
        ));
        assert!(p.ends_with("Probability:"));
        let b = PromptTemplate::builtin(Task::Bias).unwrap();
        assert!(b.stage1_prompt("x").contains("A) Left\nB) Center\nC) Right\nArticle: x\nAnswer:"));
        assert!(b.stage2_prompt("x", &b.options[2]).contains("has a right-leaning political bias?"));
    }

    #[test]
    fn custom_template_checks() {
        let opts = vec![AnswerOption::new('A', "Yes", "relevant", 1.0), AnswerOption::new('B', "No", "irrelevant", 0.0)];
        let stage2 = format!("Is <text> <answer>? {PROBABILITY_REQUEST}");
        assert!(PromptTemplate::custom("Relevant?", "Text: <text>", stage2.clone(), opts.clone()).is_ok());
        assert_eq!(
            PromptTemplate::custom("Relevant?", "Text: <text>", "Is <text> <answer>?", opts.clone()).unwrap_err(),
            TemplateError::NoProbabilityRequest
        );
        let dup = vec![opts[0].clone(), opts[0].clone()];
        assert!(matches!(PromptTemplate::custom("Q", "<text>", stage2, dup), Err(TemplateError::Options(_))));
    }
}
