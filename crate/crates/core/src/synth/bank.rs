//! Prompt fixtures keyed by behavior code. The generator draws from this bank
//! and the rule classifier is tested against it.

pub const PROMPT_BANK: [(&str, [&str; 3]); 17] = [
    (
        "ai_suggest_steps_or_plan",
        [
            "Give me a step-by-step plan for adding the summarize feature",
            "What should I do first to get the topic summary working?",
            "Outline the steps to wire the new setting into the UI",
        ],
    ),
    (
        "ai_breakdown_intent",
        [
            "Can you break this feature down into smaller tasks?",
            "Decompose the message search requirement into pieces I can code one by one",
            "Split the assignment into subtasks for backend and frontend",
        ],
    ),
    (
        "ai_improve_prompt",
        [
            "Help me refine my prompt so the model gives shorter answers",
            "Rewrite this prompt so the summarizer keeps the key points",
            "Suggest a better prompt for generating the digest email",
        ],
    ),
    (
        "ai_choose_approach",
        [
            "Should I use Celery or a simple thread pool for background jobs?",
            "Which library is simplest for calling the language model API?",
            "What are the pros and cons of caching summaries in the database?",
        ],
    ),
    (
        "ai_generate_code",
        [
            "Implement a new API endpoint that returns the message summary",
            "Add a button below the drafts list that opens the summary modal",
            "Create a helper that formats the digest for each stream",
        ],
    ),
    (
        "ai_edit_partial_code",
        [
            "Refactor this function to use a list comprehension",
            "Change the loop so it skips muted topics",
            "Update the handler to accept an optional limit argument",
        ],
    ),
    (
        "ai_write_documentation",
        [
            "write a README for this module",
            "Add docstrings to the summary helpers",
            "Write comments explaining the caching logic",
        ],
    ),
    (
        "ai_explain_bug_or_error",
        [
            "TypeError: takes 1 positional argument — why?",
            "I get a KeyError when the topic is empty, what is going on?",
            "The page crashes after I click send, any idea?",
        ],
    ),
    (
        "ai_explain_code_or_api",
        [
            "What does this function do with the stream_id argument?",
            "Explain this endpoint and what it returns",
            "What is the purpose of the narrow parameter here?",
        ],
    ),
    (
        "ai_explain_concepts",
        [
            "What is a database migration in Django?",
            "Explain how webhooks differ from polling",
            "Why do we need CSRF tokens on forms?",
        ],
    ),
    (
        "ai_understand_codebase",
        [
            "Where is the code that renders the compose box?",
            "Which files handle message editing on the server?",
            "Give me an overview of the project structure for the settings page",
        ],
    ),
    (
        "ai_critique_output",
        [
            "Can you review my implementation and tell me if it is correct?",
            "Does this look right to you before I submit?",
            "Is this approach good or would you suggest improvements to it?",
        ],
    ),
    (
        "ai_setup_environment",
        [
            "How do I install the dependencies for the dev environment?",
            "Set up a virtualenv with the right Python version for this repo",
            "Configure the API key so the server can read it",
        ],
    ),
    (
        "ai_git_operations",
        [
            "How do I rebase my branch onto main?",
            "Undo my last commit but keep the changes",
            "Resolve the merge conflict in the settings file",
        ],
    ),
    (
        "ai_run_or_deploy",
        [
            "How do I run the tests for the backend?",
            "Start the dev server on a different port",
            "Deploy the app to the staging instance",
        ],
    ),
    (
        "ai_acknowledge",
        [
            "Thanks, that worked perfectly for the login page",
            "Great, that solved it for the sidebar too",
            "Perfect, moving on to the next part now",
        ],
    ),
    (
        "ai_provide_context",
        [
            "This is what ChatGPT says and I think we should try and implement that",
            "Here is the terminal output from the last build",
            "For context, the summary should only cover unread messages",
        ],
    ),
];

/// Prompts the trivial filter is expected to catch.
pub const TRIVIAL_PROMPTS: [&str; 5] = ["ok thanks!", "yes", "OK", "hi", "thanks"];

/// Prompts that carry no classifiable intent out of context.
pub const AMBIGUOUS_PROMPTS: [&str; 2] = ["I want A", "the second one"];
