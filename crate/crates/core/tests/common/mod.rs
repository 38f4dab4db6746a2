#![allow(dead_code)]

use std::sync::{Mutex, MutexGuard};
use std::time::Duration;

use pvtwin::runtime::{PlantConfig, Service, ServiceOptions};
use serde_json::Value;

/// Paced services compete for the CPU; tests that start one take this lock.
static SERVICE_LOCK: Mutex<()> = Mutex::new(());

pub fn serial() -> MutexGuard<'static, ()> {
    SERVICE_LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

pub fn loopback_config() -> PlantConfig {
    let mut config = PlantConfig::default();
    config.gateway.bind = "127.0.0.1:0".parse().unwrap();
    config.api.bind = "127.0.0.1:0".parse().unwrap();
    config
}

pub async fn start(config: &PlantConfig) -> Service {
    start_with(config, ServiceOptions::default()).await
}

pub async fn start_with(config: &PlantConfig, options: ServiceOptions) -> Service {
    let service = Service::start(config, options).await.expect("service starts");
    // Wait for the first published tick.
    for _ in 0..500 {
        if service.hub().latest().is_some() {
            return service;
        }
        tokio::time::sleep(Duration::from_millis(2)).await;
    }
    panic!("stepper never published");
}

pub struct Api {
    pub base: String,
    pub client: reqwest::Client,
}

impl Api {
    pub fn new(service: &Service) -> Self {
        Self { base: format!("http://{}", service.api_addr()), client: reqwest::Client::new() }
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        let r = self.client.post(format!("{}{path}", self.base)).json(&body).send().await.unwrap();
        let status = r.status().as_u16();
        (status, r.json().await.unwrap())
    }
}
