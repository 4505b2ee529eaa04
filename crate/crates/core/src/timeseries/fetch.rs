use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("network error: {0}")]
    NetworkError(String),
    #[error("server answered with HTTP status {0}")]
    HttpStatus(u16),
    #[error("request timed out")]
    Timeout,
}

/// Plain GET of a CSV body; the body is returned unmodified.
pub fn fetch_prices(url: &str, timeout: Duration) -> Result<String, FetchError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| FetchError::NetworkError(e.to_string()))?;
    let response = client.get(url).send().map_err(classify)?;
    let status = response.status();
    if !status.is_success() {
        return Err(FetchError::HttpStatus(status.as_u16()));
    }
    response.text().map_err(classify)
}

fn classify(e: reqwest::Error) -> FetchError {
    if e.is_timeout() {
        FetchError::Timeout
    } else {
        FetchError::NetworkError(e.to_string())
    }
}
